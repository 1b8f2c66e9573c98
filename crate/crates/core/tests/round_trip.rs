use proptest::prelude::*;
use provlog::parse_program;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn printed_programs_parse_back(seed in any::<u64>(), single in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = provlog::testing::random_program(&mut rng, single);
        let p = parse_program(&src).unwrap();
        let printed = p.to_string();
        prop_assert_eq!(parse_program(&printed).unwrap(), p);
    }
}

#[test]
fn symbols_with_spaces_and_quotes_survive() {
    let src = ".decl p(x:symbol, n:number)\np(\"two words\", -3).\np(plain, 4).";
    let p = parse_program(src).unwrap();
    assert_eq!(parse_program(&p.to_string()).unwrap(), p);
}
