//! Structural properties over random operation sequences.

use panorama::eval::properties::{random_sequence, SequenceParams};
use panorama::panocs::{Variant, VariantKind};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = SequenceParams> {
    (2usize..7, 1usize..40, 1usize..6, 1u64..20, 0u32..60).prop_map(
        |(advertisers, rounds, kmax, max_budget, det_percent)| SequenceParams {
            advertisers,
            rounds,
            kmax,
            max_budget,
            det_percent,
        },
    )
}

fn kind() -> impl Strategy<Value = VariantKind> {
    prop::sample::select(VariantKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn structure_holds(p in params(), kind in kind(), seed in any::<u64>()) {
        let out = random_sequence(&Variant::of(kind, p.kmax), p, seed);
        prop_assert!(out.k_property);
        prop_assert!(out.matching);
        prop_assert!(out.max_first_level <= 2 * p.kmax);
        prop_assert!(out.groups_ok);
        prop_assert!(out.holds(p.kmax));
    }

    #[test]
    fn sequences_are_reproducible(p in params(), kind in kind(), seed in any::<u64>()) {
        let v = Variant::of(kind, p.kmax);
        prop_assert_eq!(random_sequence(&v, p, seed), random_sequence(&v, p, seed));
    }
}
