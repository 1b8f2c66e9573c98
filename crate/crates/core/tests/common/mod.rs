#![allow(dead_code)]

use provlog::oracle::{self, Budget, Heights};
use provlog::{parse_program, Database, Options, Program};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn evaluated(program: Program, options: Options) -> Database {
    let mut db = Database::new(program, options).expect("stratifiable");
    db.evaluate().expect("first evaluation");
    db
}

/// Every stored tuple with its height.
pub fn engine_heights(db: &Database) -> Heights {
    db.program()
        .rel_ids()
        .flat_map(|r| db.tuples(r))
        .map(|(t, a)| (t, a.height))
        .collect()
}

pub fn oracle_heights(program: &Program) -> Heights {
    oracle::minimal_heights(program, &oracle::input_heights(program), Budget::default()).expect("within budget")
}

/// The random corpus: `count` programs, alternating between the general
/// generator and the single-stratum one.
pub fn corpus(seed: u64, count: usize) -> Vec<(String, Program)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let src = provlog::testing::random_program(&mut rng, i % 3 == 2);
            let p = parse_program(&src).unwrap_or_else(|e| panic!("{e}\n{src}"));
            (src, p)
        })
        .collect()
}

/// True when all rules sit in one stratum, so every rule input has height 0.
pub fn single_rule_stratum(db: &Database) -> bool {
    db.strata().strata.iter().filter(|s| !s.rules.is_empty()).count() <= 1
        && db.program().facts.iter().all(|f| db.program().rules_for(f.relation).next().is_none())
}

/// Loads the program's inline facts with random heights in `0..=max`
/// instead of 0 and evaluates. Returns the database and the input heights
/// used, for the oracle.
pub fn evaluated_with_random_inputs(program: Program, options: Options, seed: u64, max: u32) -> (Database, Heights) {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Heights::new();
    for t in oracle::input_instance(&program) {
        inputs.insert(t, rng.gen_range(0..=max));
    }
    let mut db = Database::without_facts(program, options).expect("stratifiable");
    for (t, h) in &inputs {
        db.insert_fact_with_height(t.relation, &t.args, *h).expect("fact matches declaration");
    }
    db.evaluate().expect("first evaluation");
    (db, inputs)
}
