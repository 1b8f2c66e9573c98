use proptest::prelude::*;
use provlog::store::{Annotation, InsertOutcome, Relation, SharedRelation};
use provlog::Value;

fn tuple(xs: &[i64]) -> Vec<Value> {
    xs.iter().map(|&x| Value(x)).collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn every_interleaving_of_five_offers_keeps_the_minimum() {
    let offers = [(1, 9), (2, 4), (3, 7), (4, 4), (5, 2)];
    for perm in permutations(offers.len()) {
        let mut r = Relation::new(2, true);
        for &i in &perm {
            let (rule, h) = offers[i];
            r.insert_or_minimize(&tuple(&[1, 2]), Annotation::new(rule, h));
        }
        assert_eq!(r.annotation(&tuple(&[1, 2])).unwrap().height, 2, "{perm:?}");
        assert_eq!(r.len(), 1);
    }
}

proptest! {
    #[test]
    fn final_height_is_min_of_offers(offers in prop::collection::vec((1u32..5, 1u32..20), 1..=5)) {
        let mut r = Relation::new(1, true);
        let mut first_min: Option<Annotation> = None;
        for &(rule, h) in &offers {
            let outcome = r.insert_or_minimize(&tuple(&[7]), Annotation::new(rule, h));
            match first_min {
                None => prop_assert_eq!(outcome, InsertOutcome::Inserted),
                Some(m) if h < m.height => prop_assert_eq!(outcome, InsertOutcome::Updated(m)),
                Some(_) => prop_assert_eq!(outcome, InsertOutcome::Rejected),
            }
            if first_min.is_none_or(|m| h < m.height) {
                first_min = Some(Annotation::new(rule, h));
            }
        }
        let min = offers.iter().map(|o| o.1).min().unwrap();
        prop_assert_eq!(r.annotation(&tuple(&[7])).unwrap(), first_min.unwrap());
        prop_assert_eq!(r.annotation(&tuple(&[7])).unwrap().height, min);
    }

    #[test]
    fn updates_never_reorder(
        tuples in prop::collection::btree_set((0i64..8, 0i64..8), 1..30),
        updates in prop::collection::vec((0usize..30, 0u32..5), 0..20),
    ) {
        let tuples: Vec<_> = tuples.into_iter().collect();
        let mut r = Relation::new(2, true);
        let idx = r.build_secondary_index(&[1]);
        for &(a, b) in &tuples {
            r.insert_or_minimize(&tuple(&[a, b]), Annotation::new(1, 10));
        }
        let snapshot = |r: &Relation| {
            (
                r.iter().map(|(t, _)| t.to_vec()).collect::<Vec<_>>(),
                r.scan_index(idx, &[]).map(|t| t.values).collect::<Vec<_>>(),
            )
        };
        let before = snapshot(&r);
        for (i, h) in updates {
            let (a, b) = tuples[i % tuples.len()];
            let out = r.insert_or_minimize(&tuple(&[a, b]), Annotation::new(2, h));
            prop_assert_ne!(out, InsertOutcome::Inserted);
            prop_assert_eq!(&snapshot(&r), &before);
        }
    }

    #[test]
    fn duplicate_offers_keep_set_semantics(offers in prop::collection::vec((0i64..5, 0u32..9), 0..60)) {
        let mut r = Relation::new(1, true);
        for &(x, h) in &offers {
            r.insert_or_minimize(&tuple(&[x]), Annotation::new(1, h));
        }
        let distinct: std::collections::BTreeSet<_> = offers.iter().map(|o| o.0).collect();
        prop_assert_eq!(r.len(), distinct.len());
    }

    #[test]
    fn shared_relation_minimizes_under_threads(offers in prop::collection::vec((0i64..6, 1u32..50), 1..200)) {
        let shared = SharedRelation::new(1, 4);
        std::thread::scope(|s| {
            for chunk in offers.chunks(offers.len().div_ceil(4)) {
                let shared = &shared;
                s.spawn(move || {
                    for &(x, h) in chunk {
                        shared.insert_or_minimize(&tuple(&[x]), Annotation::new(1, h));
                    }
                });
            }
        });
        let mut want = std::collections::BTreeMap::new();
        for &(x, h) in &offers {
            let e = want.entry(x).or_insert(h);
            *e = (*e).min(h);
        }
        let got: Vec<(i64, u32)> = shared.into_sorted().into_iter().map(|(t, a)| (t[0].0, a.height)).collect();
        prop_assert_eq!(got, want.into_iter().collect::<Vec<_>>());
    }
}
