use finalchain::bisim::{approximant, bisim_at, sim_level, Level};
use finalchain::chain::Arena;
use finalchain::system::{FinSystem, PointedSystem};
use finalchain::trees::{bits_encode, BitString};
use proptest::prelude::*;

fn system() -> impl Strategy<Value = FinSystem> {
    (1usize..=6).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::vec(any::<bool>(), n), n).prop_map(move |rows| {
            let names = (0..n).map(|s| format!("s{s}")).collect();
            let succ = rows
                .into_iter()
                .map(|row| row.into_iter().enumerate().filter(|&(_, b)| b).map(|(t, _)| t).collect())
                .collect();
            FinSystem::from_parts(names, succ).unwrap()
        })
    })
}

fn pointed_pair() -> impl Strategy<Value = (PointedSystem, PointedSystem)> {
    (system(), system(), any::<prop::sample::Index>(), any::<prop::sample::Index>()).prop_map(|(a, b, i, j)| {
        let (ra, rb) = (i.index(a.len()), j.index(b.len()));
        (PointedSystem::new(a, ra).unwrap(), PointedSystem::new(b, rb).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn approximants_refine(sys in system(), k in 0usize..6) {
        prop_assert!(approximant(&sys, k + 1).refines(&approximant(&sys, k)));
    }

    #[test]
    fn kernel_is_equal_projection((x, y) in pointed_pair(), n in 0usize..6) {
        let mut arena = Arena::new();
        let same = arena.project(&x, n) == arena.project(&y, n);
        prop_assert_eq!(same, bisim_at(&x, &y, n));
    }

    #[test]
    fn projections_are_natural((x, _) in pointed_pair(), n in 0usize..7, m in 0usize..7) {
        let (lo, hi) = (n.min(m), n.max(m));
        let mut arena = Arena::new();
        let top = arena.project(&x, hi);
        prop_assert_eq!(arena.connect(top, lo).unwrap(), arena.project(&x, lo));
    }

    #[test]
    fn text_round_trips((x, _) in pointed_pair(), n in 0usize..6) {
        let mut arena = Arena::new();
        let e = arena.project(&x, n);
        let text = arena.display(e);
        prop_assert_eq!(arena.parse(&text).unwrap(), e);
        let mut fresh = Arena::new();
        let again = fresh.parse(&text).unwrap();
        prop_assert_eq!(fresh.display(again), text);
    }

    #[test]
    fn element_systems_project_to_themselves((x, _) in pointed_pair(), n in 0usize..6) {
        let mut arena = Arena::new();
        let e = arena.project(&x, n);
        let back = arena.to_system(e);
        prop_assert_eq!(arena.project(&back, n), e);
    }

    #[test]
    fn witnesses_certify((x, y) in pointed_pair()) {
        let verdict = sim_level(&x, &y);
        prop_assert!(verdict.certify());
        if let Level::Finite(k) = verdict.level {
            prop_assert!(bisim_at(&x, &y, k - 1));
            prop_assert!(!bisim_at(&x, &y, k));
        }
    }

    #[test]
    fn bit_encoding_is_injective(a in "[01]{0,6}", b in "[01]{0,6}") {
        let (ca, cb): (BitString, BitString) = (a.parse().unwrap(), b.parse().unwrap());
        prop_assert_eq!(bits_encode(&ca) == bits_encode(&cb), a == b);
    }
}
