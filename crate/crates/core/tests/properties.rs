use kernel_lattice::measure::integrate;
use kernel_lattice::operator::MeasureOperator;
use kernel_lattice::{BoundedFunction, SignedMeasure, SpaceRef, StateSpace, TransitionKernel};
use proptest::prelude::*;

fn entries(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![4 => -2.0..2.0f64, 1 => Just(0.0)], len)
}

fn kernel_and_measure() -> impl Strategy<Value = (TransitionKernel, SignedMeasure)> {
    (1usize..=7).prop_flat_map(|n| {
        (entries(n * n), entries(n)).prop_map(move |(k, m)| {
            let s = StateSpace::discrete(n).unwrap();
            (
                TransitionKernel::from_flat(&s, k).unwrap(),
                SignedMeasure::new(&s, m).unwrap(),
            )
        })
    })
}

fn positive(mu: &SignedMeasure) -> SignedMeasure {
    mu.abs()
}

fn space_of(k: &TransitionKernel) -> &SpaceRef {
    k.space()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn jordan_parts_reassemble((_k, mu) in kernel_and_measure()) {
        let (p, n) = mu.jordan_decomposition();
        prop_assert_eq!(p.sub(&n).unwrap(), mu.clone());
        prop_assert!(p.is_positive() && n.is_positive());
        prop_assert_eq!(p.add(&n).unwrap(), mu.abs());
        let (plus, minus) = mu.hahn_sets();
        prop_assert!(plus.is_disjoint(&minus));
        prop_assert_eq!(plus.len() + minus.len(), mu.len());
        prop_assert!(mu.mass_of(&plus) >= 0.0 && mu.mass_of(&minus) <= 0.0);
        prop_assert!((mu.mass_of(&plus) - p.total_mass()).abs() <= 1e-12);
    }

    #[test]
    fn kernel_riesz_decomposition((k, _mu) in kernel_and_measure()) {
        let p = k.positive_part();
        let n = k.negative_part();
        prop_assert_eq!(p.sub(&n).unwrap(), k.clone());
        prop_assert_eq!(p.add(&n).unwrap(), k.modulus());
        prop_assert_eq!(p.meet(&n).unwrap(), TransitionKernel::zero(space_of(&k)));
    }

    #[test]
    fn duality((k, mu) in kernel_and_measure(), seed in any::<u64>()) {
        let s = k.space().clone();
        let f = BoundedFunction::from_fn(&s, |x| ((seed >> (x % 60)) & 7) as f64 - 3.5).unwrap();
        let op = MeasureOperator::new(k);
        let lhs = integrate(&op.adjoint_apply(&f).unwrap(), &mu).unwrap();
        let rhs = integrate(&f, &op.apply(&mu).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn norm_bound((k, mu) in kernel_and_measure()) {
        let op = MeasureOperator::new(k.clone());
        let image = op.apply(&mu).unwrap();
        prop_assert!(image.total_variation() <= k.bound() * mu.total_variation() * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn monotone_in_the_kernel((k, mu) in kernel_and_measure()) {
        let m = positive(&mu);
        let upper = k.join(&k.modulus()).unwrap();
        prop_assert!(k.leq(&upper).unwrap());
        let lo = MeasureOperator::new(k).apply(&m).unwrap();
        let hi = MeasureOperator::new(upper).apply(&m).unwrap();
        prop_assert!(lo.leq(&hi).unwrap());
    }

    #[test]
    fn oracle_matches_kernel_positive_part((k, mu) in kernel_and_measure()) {
        let m = positive(&mu);
        let op = MeasureOperator::new(k.clone());
        let oracle = op.positive_part_oracle(&m, 12).unwrap();
        let direct = MeasureOperator::new(k.positive_part()).apply(&m).unwrap();
        prop_assert!(oracle.max_abs_diff(&direct).unwrap() <= 1e-12);
    }

    #[test]
    fn composition_acts_in_sequence((k, mu) in kernel_and_measure(), flip in any::<bool>()) {
        let other = if flip { k.modulus() } else { k.positive_part() };
        let composed = MeasureOperator::new(k.compose(&other).unwrap()).apply(&mu).unwrap();
        let stepwise = MeasureOperator::new(other)
            .apply(&MeasureOperator::new(k).apply(&mu).unwrap())
            .unwrap();
        prop_assert!(composed.max_abs_diff(&stepwise).unwrap() <= 1e-12);
    }
}
