use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ttb_core::ensembles::clopper_pearson_upper;
use ttb_core::majorization::{majorizes, random_doubly_stochastic};
use ttb_core::multivariate::BetaQuadrature;
use ttb_core::norms::{ky_fan_norm, schatten_norm, GaugeSpec};
use ttb_core::spectral::eig_hermitian;
use ttb_core::tail::{log_grid, PolynomialSpec};
use ttb_core::tensor::Shape;
use ttb_core::{Hermitian, Tensor};

fn shape_strategy() -> impl Strategy<Value = Shape> {
    prop_oneof![Just(vec![2, 2]), Just(vec![2, 3]), Just(vec![3]), Just(vec![2, 2, 2])]
        .prop_map(|d| Shape::new(d).unwrap())
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fold_unfold_round_trip(shape in shape_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Tensor::random_gaussian(&shape, &mut rng);
        let back = Tensor::fold(&shape, a.unfold()).unwrap();
        prop_assert_eq!(back.unfold().max_abs_diff(&a.unfold()), 0.0);
    }

    #[test]
    fn einstein_product_is_associative(shape in shape_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Tensor::random_gaussian(&shape, &mut rng);
        let b = Tensor::random_gaussian(&shape, &mut rng);
        let c = Tensor::random_gaussian(&shape, &mut rng);
        let left = a.einstein_product(&b).unwrap().einstein_product(&c).unwrap();
        let right = a.einstein_product(&b.einstein_product(&c).unwrap()).unwrap();
        let diff = left.sub(&right).unwrap().frobenius_norm();
        prop_assert!(diff <= 1e-12 * left.frobenius_norm().max(1.0));
    }

    #[test]
    fn trace_equals_eigenvalue_sum(shape in shape_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = Hermitian::random(&shape, &mut rng);
        let dec = eig_hermitian(&h).unwrap();
        let ev = dec.eigenvalues();
        prop_assert!(ev.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(rel_close(ev.iter().sum(), h.as_tensor().trace().re, 1e-10));
    }

    #[test]
    fn ky_fan_norms_are_monotone_and_subadditive(shape in shape_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Tensor::random_gaussian(&shape, &mut rng);
        let b = Tensor::random_gaussian(&shape, &mut rng);
        let d = a.dim();
        let norms: Vec<f64> = (1..=d).map(|k| ky_fan_norm(&a, k).unwrap()).collect();
        prop_assert!(norms.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        prop_assert!(rel_close(norms[d - 1], schatten_norm(&a, 1.0).unwrap(), 1e-12));
        let sum = a.add(&b).unwrap();
        for k in 1..=d {
            let lhs = ky_fan_norm(&sum, k).unwrap();
            let rhs = ky_fan_norm(&a, k).unwrap() + ky_fan_norm(&b, k).unwrap();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }

    #[test]
    fn gauge_is_unitarily_invariant(seed in any::<u64>(), k in 1usize..4) {
        let shape = Shape::new(vec![2, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Tensor::random_gaussian(&shape, &mut rng);
        let u = Tensor::random_unitary(&shape, &mut rng);
        let v = Tensor::random_unitary(&shape, &mut rng);
        let rotated = u.einstein_product(&a).unwrap().einstein_product(&v).unwrap();
        for g in [GaugeSpec::KyFan { k }, GaugeSpec::Schatten { p: 3.0 }, GaugeSpec::Operator] {
            prop_assert!(rel_close(g.norm(&a).unwrap(), g.norm(&rotated).unwrap(), 1e-10));
        }
    }

    #[test]
    fn doubly_stochastic_mix_is_majorized(
        y in prop::collection::vec(-5.0f64..5.0, 2..8),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_doubly_stochastic(y.len(), 3, &mut rng);
        let mut x: Vec<f64> = s.iter().map(|row| row.iter().zip(&y).map(|(a, b)| a * b).sum()).collect();
        let mut y = y;
        x.sort_by(|a, b| b.total_cmp(a));
        y.sort_by(|a, b| b.total_cmp(a));
        prop_assert!(majorizes(&y, &x).unwrap());
    }

    #[test]
    fn beta_density_has_unit_mass(theta in 0.0f64..0.999) {
        let q = BetaQuadrature::new(theta, 12.0, 32).unwrap();
        prop_assert!((q.total_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn clopper_pearson_brackets_the_point_estimate(trials in 1usize..5000, frac in 0.0f64..1.0) {
        let hits = ((trials as f64) * frac).floor() as usize;
        let u = clopper_pearson_upper(hits, trials, 0.95).unwrap();
        prop_assert!(u >= hits as f64 / trials as f64);
        prop_assert!(u <= 1.0);
        if hits < trials {
            prop_assert!(clopper_pearson_upper(hits + 1, trials, 0.95).unwrap() >= u);
        }
    }

    #[test]
    fn log_grid_is_increasing_with_exact_ends(lo in 1e-6f64..1.0, span in 1.01f64..1e4, n in 2usize..500) {
        let hi = lo * span;
        let g = log_grid(lo, hi, n).unwrap();
        prop_assert_eq!(g[0], lo);
        prop_assert_eq!(g[n - 1], hi);
        prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn polynomial_eval_matches_expansion(a in prop::collection::vec(0.0f64..3.0, 1..5), x in 0.0f64..4.0, s in 1.0f64..3.0) {
        let g = PolynomialSpec::new(a.clone(), s).unwrap();
        let direct: f64 = a.iter().enumerate().map(|(l, c)| c * x.powi(l as i32)).sum();
        prop_assert!(rel_close(g.eval(x).unwrap(), direct.powf(s), 1e-12));
    }
}
