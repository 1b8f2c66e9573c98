mod common;

use std::cmp::Ordering;

use proptest::prelude::*;
use provlog::oracle::{provenance_cmp, provenance_le, Heights};
use provlog::{Constant, GroundAtom, Options, RelId};

fn instance() -> impl Strategy<Value = Heights> {
    prop::collection::btree_map(0i64..6, 0u32..4, 0..5).prop_map(|m| {
        m.into_iter()
            .map(|(k, h)| (GroundAtom::new(RelId(0), vec![Constant::Number(k)]), h))
            .collect()
    })
}

proptest! {
    #[test]
    fn reflexive(a in instance()) {
        prop_assert!(provenance_le(&a, &a));
        prop_assert_eq!(provenance_cmp(&a, &a), Some(Ordering::Equal));
    }

    #[test]
    fn antisymmetric(a in instance(), b in instance()) {
        if provenance_le(&a, &b) && provenance_le(&b, &a) {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn transitive(a in instance(), b in instance(), c in instance()) {
        if provenance_le(&a, &b) && provenance_le(&b, &c) {
            prop_assert!(provenance_le(&a, &c));
        }
    }
}

#[test]
fn growing_a_store_moves_up_the_order() {
    let t = |k| GroundAtom::new(RelId(0), vec![Constant::Number(k)]);
    let before: Heights = [(t(1), 5)].into();
    let after: Heights = [(t(1), 3), (t(2), 9)].into();
    assert_eq!(provenance_cmp(&before, &after), Some(Ordering::Less));
    let other: Heights = [(t(3), 0)].into();
    assert_eq!(provenance_cmp(&before, &other), None);
}

/// Replays the merge history change by change: each store state sits above
/// the previous one, so in particular every iteration's does.
#[test]
fn iterations_are_monotone() {
    for (i, (src, p)) in common::corpus(23, 80).into_iter().enumerate() {
        let (db, inputs) = common::evaluated_with_random_inputs(
            p,
            Options {
                record_history: true,
                ..Options::default()
            },
            i as u64,
            5,
        );
        let mut state = inputs;
        for e in db.history() {
            let next_state = {
                let mut s = state.clone();
                let t = db.ground(e.relation, &e.tuple);
                if let Some(prev) = e.previous {
                    assert_eq!(s[&t], prev.height, "{src}");
                    assert!(e.annotation.height < prev.height, "{src}");
                }
                s.insert(t, e.annotation.height);
                s
            };
            assert!(provenance_le(&state, &next_state), "{src}");
            state = next_state;
        }
        assert_eq!(state, common::engine_heights(&db), "{src}");
    }
}
