mod common;

use common::*;
use histories_core::config::{space_to_config, ModelConfig};
use histories_core::ergodic::{time_average_measure, DiscreteMap, Region};
use histories_core::history::{decoherence_matrix, decoherence_report, enumerate_histories, Budget};
use histories_core::models::{
    count_fraction_exact, hilbert_bernoulli_model_with_present, measure_fraction_exact,
    measure_outside_exact, partial_decoherence_model, partial_decoherence_reference_query, BranchTree,
    FrequencyQuery,
};
use histories_core::operator::{born_probability, heisenberg_projector, validate_projector, Operator, C64};
use histories_core::probability::compare_views;
use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;

fn unitary(d: usize, vals: &[f64]) -> Operator {
    let mut m = DMatrix::from_fn(d, d, |i, j| C64::new(vals[2 * (i * d + j)], vals[2 * (i * d + j) + 1]));
    for i in 0..d {
        m[(i, i)] += C64::new(1.5, 0.0);
    }
    Operator::new(m.qr().q()).unwrap()
}

fn arb_square(max_dim: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (2usize..=max_dim).prop_flat_map(|d| (Just(d), prop::collection::vec(-1.0f64..1.0, 6 * d * d)))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 160, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn random_spaces_satisfy_core_invariants((_, space) in arb_space()) {
        check_invariants(&space)?;
    }

    #[test]
    fn config_export_rebuilds_the_same_space((_, space) in arb_space()) {
        let text = space_to_config(&space).to_toml().unwrap();
        let rebuilt = ModelConfig::parse(&text).unwrap().build_space().unwrap();
        let (_, d0) = decoherence_matrix(&space, &Budget::default()).unwrap();
        let (_, d1) = decoherence_matrix(&rebuilt, &Budget::default()).unwrap();
        let diff = (d0 - d1).map(|z| z.norm()).max();
        prop_assert!(diff <= 1e-12, "rebuilt D differs by {diff:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn trace_is_cyclic((d, vals) in arb_square(8)) {
        let a = Operator::new(DMatrix::from_fn(d, d, |i, j| C64::new(vals[i * d + j], vals[d * d + i * d + j]))).unwrap();
        let b = Operator::new(DMatrix::from_fn(d, d, |i, j| C64::new(vals[2 * d * d + i * d + j], vals[3 * d * d + i * d + j]))).unwrap();
        let ab = a.trace_product(&b).unwrap();
        let ba = b.trace_product(&a).unwrap();
        prop_assert!((ab - ba).norm() <= 1e-12);
        prop_assert!((ab - a.mul(&b).unwrap().trace()).norm() <= 1e-12);
    }

    #[test]
    fn heisenberg_picture_matches_schroedinger((d, vals) in arb_square(6), k in 0usize..6) {
        let u = unitary(d, &vals);
        let mut p = DMatrix::<C64>::zeros(d, d);
        p[(k % d, k % d)] = C64::new(1.0, 0.0);
        let p = Operator::new(p).unwrap();
        let psi = nalgebra::DVector::from_fn(d, |i, _| C64::new(vals[4 * d * d + i], vals[5 * d * d + i]) + C64::new(0.1, 0.0));
        let rho = Operator::pure_state(&(psi.clone() / C64::new(psi.norm(), 0.0)), 1e-9).unwrap();
        let heis = heisenberg_projector(&p, &u, 1e-9).unwrap();
        prop_assert!(validate_projector(heis.matrix(), 1e-9).unwrap().is_projector);
        let evolved = Operator::new(u.matrix() * rho.matrix() * u.matrix().adjoint()).unwrap();
        let a = born_probability(&heis, &rho, 1e-9).unwrap();
        let b = born_probability(&p, &evolved, 1e-9).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn product_model_reproduces_tree_measures(n in 1usize..=6, p in 0.0f64..=1.0, present_seed in 0usize..6) {
        let present = present_seed % n;
        let space = hilbert_bernoulli_model_with_present(n, p, present).unwrap();
        let tree = BranchTree::bernoulli(n, p).unwrap();
        for h in enumerate_histories(&space, space.full_range()).unwrap() {
            let quantum = space.segment_measure(&h).unwrap();
            let classical = tree.history_measure(h.outcomes()).unwrap();
            prop_assert!((quantum - classical).abs() <= 1e-12, "{h}: {quantum} vs {classical}");
        }
        prop_assert!(decoherence_report(&space, 1e-8).unwrap().max_offdiag < 1e-14);
    }

    #[test]
    fn count_fraction_matches_pascal(n in 1u64..=60, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let q = FrequencyQuery::new(0, lo, hi).unwrap();
        let row = pascal_row(n as usize);
        let total: BigUint = row.iter().sum();
        let hits: BigUint = row
            .iter()
            .enumerate()
            .filter(|(k, _)| q.contains(*k as u64, n))
            .map(|(_, v)| v.clone())
            .sum();
        prop_assert_eq!(count_fraction_exact(n, &q), BigRational::new(hits.into(), total.into()));
    }

    #[test]
    fn inside_and_outside_sum_to_one(n in 1usize..=80, p in 0.0f64..=1.0, c in 0.0f64..=1.0, w in 0.0f64..0.5) {
        let tree = BranchTree::bernoulli(n, p).unwrap();
        let q = FrequencyQuery::around(0, c, w).unwrap();
        let inside = measure_fraction_exact(&tree, &q).unwrap();
        let outside = measure_outside_exact(&tree, &q).unwrap();
        prop_assert_eq!(inside + outside, BigRational::one());
    }

    #[test]
    fn measure_fraction_matches_convolution(n in 1usize..=40, p in 0.0f64..=1.0, a in 0u32..=20, b in 0u32..=20) {
        let (lo, hi) = (a.min(b) as f64 / 20.0, a.max(b) as f64 / 20.0);
        let tree = BranchTree::bernoulli(n, p).unwrap();
        let got = measure_fraction_exact(&tree, &FrequencyQuery::new(0, lo, hi).unwrap()).unwrap();
        let want = binomial_window(n, &exact(p), &ratio(a.min(b) as i64, 20), &ratio(a.max(b) as i64, 20));
        prop_assert_eq!(got, want);
    }

    #[test]
    fn hit_counts_add_over_disjoint_regions(alpha in 0.0f64..1.0, x0 in 0.0f64..1.0, cut in 0.01f64..0.99, steps in 1u64..5000) {
        let map = DiscreteMap::rotation(vec![alpha], vec![x0]).unwrap();
        let left = Region::interval(0.0, cut).unwrap();
        let right = Region::interval(cut, 1.0).unwrap();
        let whole = left.union(&right).unwrap();
        let l = time_average_measure(&map, &left, steps).unwrap();
        let r = time_average_measure(&map, &right, steps).unwrap();
        let w = time_average_measure(&map, &whole, steps).unwrap();
        prop_assert_eq!(l.hits + r.hits, w.hits);
        prop_assert_eq!(w.hits, steps);
    }

    #[test]
    fn divergence_grows_with_mixing(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (f, a0) = partial_decoherence_reference_query();
        let x = compare_views(&partial_decoherence_model(lo).unwrap(), &f, a0).unwrap();
        let y = compare_views(&partial_decoherence_model(hi).unwrap(), &f, a0).unwrap();
        prop_assert!(x.gap <= y.gap + 1e-12);
        prop_assert!(x.max_normalized_offdiag <= y.max_normalized_offdiag + 1e-12);
    }
}
