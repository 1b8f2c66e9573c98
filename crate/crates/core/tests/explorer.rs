mod common;

use std::collections::BTreeMap;

use provlog::explain::{self, Explorer, LiteralKind, NegationSession, SessionStep};
use provlog::oracle::{self, Budget};
use provlog::{Constant, GroundAtom, Options};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn full_fragments_have_stored_height_and_validate() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    for (i, (src, p)) in common::corpus(29, 120).into_iter().enumerate() {
        let (mut db, inputs) = common::evaluated_with_random_inputs(p.clone(), Options::default(), i as u64, 3);
        explain::prepare(&mut db);
        let ex = Explorer::new(&db);
        let heights = common::engine_heights(&db);
        let want = oracle::minimal_heights(&p, &inputs, Budget::default()).unwrap();
        let mut tuples: Vec<_> = heights.keys().cloned().collect();
        tuples.shuffle(&mut rng);
        for t in tuples.iter().take(12) {
            let tree = ex.explain(t, usize::MAX).unwrap();
            ex.verify(&tree).unwrap_or_else(|e| panic!("{e}\n{src}"));
            assert!(tree.is_complete());
            assert!(tree.tree_height() <= tree.height);
            assert_eq!(tree.height, want[t]);
            let again = ex.explain(t, usize::MAX).unwrap();
            assert_eq!(again, tree);
            checked += 1;
        }
    }
    assert!(checked > 300);
}

#[test]
fn zero_input_heights_give_tree_height_equal_to_annotation() {
    for (src, p) in common::corpus(31, 80) {
        let db = common::evaluated(p.clone(), Options::default());
        let ex = Explorer::new(&db);
        for (t, h) in common::engine_heights(&db) {
            let tree = ex.explain(&t, usize::MAX).unwrap();
            assert_eq!(tree.tree_height(), h, "{src}");
            let oracle_tree = oracle::enumerate_min_proof_tree(&p, &oracle::input_heights(&p), &t, Budget::default()).unwrap();
            assert_eq!(oracle_tree.tree_height(), h, "{src}");
        }
    }
}

#[test]
fn depth_bounds_the_fragment() {
    for (_, p) in common::corpus(37, 40) {
        let db = common::evaluated(p, Options::default());
        let ex = Explorer::new(&db);
        for (t, h) in common::engine_heights(&db) {
            for depth in 0..4 {
                let f = ex.explain(&t, depth).unwrap();
                assert!(f.tree_height() as usize <= depth);
                assert!(f.tree_height() <= h);
                ex.verify(&f).unwrap();
            }
        }
    }
}

/// Random absent tuples and random bindings: every failed subproof has a
/// failing literal and its marks agree with plain membership.
#[test]
fn failed_subproofs_are_sound() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut seen = 0;
    for (src, p) in common::corpus(43, 120) {
        let db = common::evaluated(p.clone(), Options::default());
        let ex = Explorer::new(&db);
        for rel in p.rel_ids().filter(|r| p.rules_for(*r).next().is_some()) {
            for _ in 0..5 {
                let arity = p.relation(rel).arity();
                let t = GroundAtom::new(rel, (0..arity).map(|_| Constant::Number(rng.gen_range(0..7))).collect());
                if db.contains(&t) {
                    continue;
                }
                for c in ex.negation_candidates(&t).unwrap() {
                    let free = ex.negation_free_variables(c.rule, &t).unwrap();
                    let bindings: BTreeMap<_, _> = free
                        .iter()
                        .map(|f| (f.name.clone(), Constant::Number(rng.gen_range(0..7))))
                        .collect();
                    let failed = ex.evaluate_failed_subproof(c.rule, &t, &bindings).unwrap();
                    assert!(failed.failures() >= 1, "{src}");
                    for l in &failed.literals {
                        match &l.kind {
                            LiteralKind::Atom(a) => assert_eq!(l.holds, db.contains(a)),
                            LiteralKind::Negated(a) => assert_eq!(l.holds, !db.contains(a)),
                            LiteralKind::Constraint => {}
                        }
                    }
                    seen += 1;
                }
            }
        }
    }
    assert!(seen > 100);
}

#[test]
fn session_on_points_to() {
    let p = provlog::parse_program(provlog::testing::POINTS_TO).unwrap();
    let db = common::evaluated(p.clone(), Options::default());
    let ex = Explorer::new(&db);
    let t = p.ground("vpt", vec![Constant::symbol("b"), Constant::symbol("l4")]).unwrap();
    let mut s = NegationSession::start(&ex, t).unwrap();
    s.pick_rule(&ex, 3).unwrap();
    for v in ["c", "f", "c", "a"] {
        assert_eq!(s.step, SessionStep::BindVariables);
        s.bind_text(&ex, v).unwrap();
    }
    let marks: Vec<bool> = s.result.unwrap().literals.iter().map(|l| l.holds).collect();
    // load(b, c, f) and store(c, f, a) hold, vpt(a, l4) and alias(c, c) fail
    assert_eq!(marks, [true, true, false, false]);
}

#[test]
fn plain_mode_cannot_explain() {
    let p = provlog::parse_program(provlog::testing::POINTS_TO).unwrap();
    let db = common::evaluated(
        p.clone(),
        Options {
            provenance: false,
            ..Options::default()
        },
    );
    let t = p.ground("vpt", vec![Constant::symbol("b"), Constant::symbol("l1")]).unwrap();
    assert_eq!(Explorer::new(&db).explain(&t, 3), Err(provlog::ExplainError::NoProvenance));
}
