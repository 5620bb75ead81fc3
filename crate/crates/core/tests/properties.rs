mod common;

use mdpcg::fixtures;
use mdpcg::{
    build_incidence, build_transformation, derive_primal_graph, linalg, sensitivity, solve,
    BraessReport, SolverChoice,
};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn incidence_columns_sum_to_zero(seed in any::<u64>(), states in 2usize..7) {
        let spec = fixtures::random_game::<f64>(&mut ChaCha8Rng::seed_from_u64(seed), states);
        let e = build_incidence(&spec).unwrap().full;
        for col in e.column_iter() {
            prop_assert!(col.sum().abs() <= 1e-12);
        }
        prop_assert_eq!(linalg::numerical_rank(&e), states - 1);
    }

    #[test]
    fn equilibria_are_certified(seed in any::<u64>(), states in 2usize..6) {
        let spec = fixtures::random_game::<f64>(&mut ChaCha8Rng::seed_from_u64(seed), states);
        let eps = spec.zero_perturbation();
        let eq = solve(&spec, &eps, SolverChoice::FrankWolfe, 1e-10).unwrap();
        let l = spec.cost_eval(&eq.y, &eps).unwrap();
        prop_assert!(eq.kkt_residual <= 1e-6);
        prop_assert!(eq.wardrop_gap <= 1e-6 * spec.mass() * l.amax());
        prop_assert!(eq.y.min() >= -1e-10);
        prop_assert!(eq.mu.min() >= -1e-8 * l.amax());
        prop_assert!((eq.lambda - eq.y.dot(&l) / spec.mass()).abs() <= 1e-12 * eq.lambda.abs().max(1.0));
    }

    #[test]
    fn sensitivity_invariants(seed in any::<u64>()) {
        let spec = fixtures::random_interior_game::<f64>(&mut ChaCha8Rng::seed_from_u64(seed));
        let eps = spec.zero_perturbation();
        let eq = solve(&spec, &eps, SolverChoice::Auto, 1e-12).unwrap();
        let r = sensitivity(&spec, &eq, &eps).unwrap();
        let scale = r.scale();
        prop_assert!(r.feasibility_residual() <= 1e-9 * r.dy_deps.amax().max(1.0));
        prop_assert!(r.stationarity_residual() <= 1e-9 * scale);
        prop_assert!(r.consistency_residual() <= 1e-9 * scale);
        prop_assert!(r.range_residual() <= 1e-8 * r.dl_deps.norm().max(1.0));
    }

    #[test]
    fn braess_flag_matches_negative_part(g in proptest::collection::vec(-5.0f64..5.0, 1..8)) {
        let g = DVector::from_vec(g);
        let r = BraessReport::from_gradient(&g);
        prop_assert_eq!(r.paradox_possible, g.min() < -1e-9 * g.amax());
        prop_assert!(r.worst_direction.iter().all(|v| *v >= 0.0));
        prop_assert!((r.worst_direction.norm() - 1.0).abs() <= 1e-12);
        if r.paradox_possible {
            prop_assert!(r.predicted_rate < 0.0);
        }
    }

    #[test]
    fn transformations_are_column_stochastic(seed in any::<u64>(), states in 2usize..6) {
        let spec = fixtures::random_game::<f64>(&mut ChaCha8Rng::seed_from_u64(seed), states);
        let primal = derive_primal_graph(&spec).unwrap();
        for col in primal.d.column_iter() {
            prop_assert_eq!(col.sum(), 0.0);
        }
        let t = build_transformation(&spec, &primal).unwrap();
        prop_assert!(t.t.iter().all(|v| *v >= 0.0));
        for col in t.t.column_iter() {
            prop_assert!((col.sum() - 1.0).abs() <= 1e-12);
        }
        prop_assert!(t.sigma_max >= 1.0 - 1e-12);
        let e = build_incidence(&spec).unwrap().full;
        prop_assert!((&primal.d * &t.t - e).amax() <= 1e-12);
    }
}
