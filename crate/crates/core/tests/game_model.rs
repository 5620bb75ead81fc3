mod common;

use approx::assert_relative_eq;
use common::{matrix, vec};
use mdpcg::fixtures;
use mdpcg::{
    build_incidence, reduce_incidence, validate_assumptions, CostModel, Error, Game, Hyperarc,
    PowerCost,
};
use mdpcg_testkit::simpson;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn wheatstone_incidence() {
    let spec = fixtures::wheatstone::<f64>();
    let e = build_incidence(&spec).unwrap();
    let expected = matrix(&[
        vec![1.0, 0.0, 0.0, 0.0, 1.0, -1.0],
        vec![-1.0, 1.0, 1.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, -0.9, 1.0, -1.0, 0.0],
        vec![0.0, -1.0, -0.1, -1.0, 0.0, 1.0],
    ]);
    assert!((&e.full - &expected).amax() < 1e-15);
    let r = reduce_incidence(&e).unwrap();
    assert_eq!(r.removed_row, 3);
    assert_eq!(r.reduced, expected.rows(0, 3).into_owned());
}

#[test]
fn trivial_incidences() {
    let e = build_incidence(&fixtures::self_loop::<f64>()).unwrap();
    assert_eq!(e.full, DMatrix::zeros(1, 1));
    let r = reduce_incidence(&e).unwrap();
    assert_eq!(r.reduced.nrows(), 0);

    let e = build_incidence(&fixtures::swap::<f64>()).unwrap();
    assert_eq!(e.full, matrix(&[vec![1.0, -1.0], vec![-1.0, 1.0]]));
    assert_eq!(reduce_incidence(&e).unwrap().reduced, matrix(&[vec![1.0, -1.0]]));
}

#[test]
fn kronecker_form_for_state_major_games() {
    // Two actions per state, listed state-major.
    let arcs = vec![
        Hyperarc::new(0, "a", vec![(1, 0.5), (2, 0.5)]),
        Hyperarc::new(0, "b", vec![(0, 0.3), (1, 0.7)]),
        Hyperarc::deterministic(1, "a", 2),
        Hyperarc::new(1, "b", vec![(0, 1.0)]),
        Hyperarc::new(2, "a", vec![(0, 0.2), (1, 0.2), (2, 0.6)]),
        Hyperarc::deterministic(2, "b", 1),
    ];
    let spec = Game::new(3, arcs, CostModel::affine(vec![1.0; 6], vec![0.0; 6]), 1.0).unwrap();
    let e = build_incidence(&spec).unwrap();
    let kron = DMatrix::identity(3, 3).kronecker(&DMatrix::from_element(1, 2, 1.0));
    assert!((&e.full - (kron - spec.kernel())).amax() < 1e-15);
}

#[test]
fn reduction_keeps_the_flow_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = fixtures::random_game::<f64>(&mut rng, 3);
    let e = build_incidence(&spec).unwrap();
    let r = reduce_incidence(&e).unwrap();
    for _ in 0..100 {
        let c = DVector::from_fn(spec.num_hyperarcs(), |_, _| rng.random_range(-1.0..1.0));
        let y = mdpcg::mdp_linear_oracle(&spec, &c).unwrap();
        assert!((&r.reduced * &y).amax() < 1e-9);
        assert!((&e.full * &y).amax() < 1e-9);
    }
}

#[test]
fn rank_deficiency_is_reported() {
    let arcs = vec![Hyperarc::deterministic(0, "stay", 0), Hyperarc::deterministic(1, "stay", 1)];
    let spec = Game::new(2, arcs, CostModel::affine(vec![1.0, 1.0], vec![0.0, 0.0]), 1.0).unwrap();
    let report = validate_assumptions(&spec);
    assert!(!report.strongly_connected);
    assert!(!report.rank_ok);
    assert_eq!(report.incidence_rank, 0);
    let e = build_incidence(&spec).unwrap();
    assert!(matches!(reduce_incidence(&e), Err(Error::RankDeficient { rank: 0, expected: 1 })));
}

#[test]
fn wheatstone_passes_validation() {
    let report = validate_assumptions(&fixtures::wheatstone::<f64>());
    assert!(report.all_ok(), "{:?}", report.messages);
    assert_eq!(report.incidence_rank, 3);
}

#[test]
fn zero_slope_is_not_monotone() {
    let spec = fixtures::wheatstone::<f64>();
    let costs = CostModel::affine(vec![9.0, 0.1, 0.0, 9.0, 0.1, 0.1], vec![1.0, 1.0, 0.0, 1.0, 0.1, 0.0]);
    let report = validate_assumptions(&spec.with_costs(costs).unwrap());
    assert!(!report.costs_monotone);
    assert!(!report.all_ok());
}

#[test]
fn kernel_normalization() {
    let near = vec![Hyperarc::new(0, "a", vec![(1, 0.5 + 1e-13), (0, 0.5)]), Hyperarc::deterministic(1, "b", 0)];
    let costs = CostModel::affine(vec![1.0, 1.0], vec![0.0, 0.0]);
    let spec = Game::new(2, near, costs.clone(), 1.0).unwrap();
    let total: f64 = spec.hyperarcs()[0].heads.iter().map(|h| h.1).sum();
    assert!((total - 1.0).abs() < 1e-15);

    let far = vec![Hyperarc::new(0, "a", vec![(1, 0.6), (0, 0.5)]), Hyperarc::deterministic(1, "b", 0)];
    assert!(matches!(
        Game::new(2, far, costs.clone(), 1.0),
        Err(Error::KernelNotStochastic { hyperarc: 0, .. })
    ));
    let missing = vec![Hyperarc::deterministic(0, "a", 1)];
    assert!(Game::new(2, missing, CostModel::affine(vec![1.0], vec![0.0]), 1.0).is_err());
    let arcs = vec![Hyperarc::deterministic(0, "a", 1), Hyperarc::deterministic(1, "b", 0)];
    assert!(Game::new(2, arcs, costs, 0.0).is_err());
}

#[test]
fn cost_evaluation() {
    let spec = fixtures::wheatstone::<f64>();
    let zero = spec.zero_perturbation();
    let b = spec.cost_eval(&zero, &zero).unwrap();
    assert_eq!(b, vec(&[1.0, 1.0, 0.0, 1.0, 0.1, 0.0]));
    let ones = DVector::from_element(6, 1.0);
    let l = spec.cost_eval(&ones, &zero).unwrap();
    assert!((l - vec(&[10.0, 1.1, 0.1, 10.0, 0.2, 0.1])).amax() < 1e-15);
    let mut eps = zero.clone();
    eps[2] = 0.5;
    assert_eq!(spec.cost_eval(&zero, &eps).unwrap(), vec(&[1.0, 1.0, 0.5, 1.0, 0.1, 0.0]));
    let mut neg = zero.clone();
    neg[0] = -1e-9;
    assert!(matches!(spec.cost_eval(&neg, &zero), Err(Error::NegativeMass { index: 0, .. })));
}

#[test]
fn potential_values() {
    let spec = fixtures::wheatstone::<f64>();
    let zero = spec.zero_perturbation();
    let mut e1 = zero.clone();
    e1[0] = 1.0;
    assert_relative_eq!(spec.potential_eval(&e1, &zero).unwrap(), 5.5);
    assert_eq!(spec.potential_eval(&zero, &zero).unwrap(), 0.0);

    let y = vec(&[32.0, 32.0, 0.0, 59.0, 59.0, 91.0]) / 273.0;
    let (a, b) = ([9.0, 0.1, 0.1, 9.0, 0.1, 0.1], [1.0, 1.0, 0.0, 1.0, 0.1, 0.0]);
    let quadrature: f64 = (0..6).map(|k| simpson(|u| a[k] * u + b[k], 0.0, y[k], 2)).sum();
    assert_relative_eq!(spec.potential_eval(&y, &zero).unwrap(), quadrature, epsilon = 1e-12);
}

fn cubic_wheatstone() -> Game {
    fixtures::wheatstone::<f64>()
        .with_costs(CostModel::general(PowerCost {
            coeff: vec(&[9.0, 0.1, 0.1, 9.0, 0.1, 0.1]),
            intercept: vec(&[1.0, 1.0, 0.0, 1.0, 0.1, 0.0]),
            power: 3,
        }))
        .unwrap()
}

#[test]
fn general_potential_matches_quadrature() {
    let spec = cubic_wheatstone();
    let zero = spec.zero_perturbation();
    let y = vec(&[0.3, 0.2, 0.1, 0.25, 0.15, 0.4]);
    let (a, b) = ([9.0, 0.1, 0.1, 9.0, 0.1, 0.1], [1.0, 1.0, 0.0, 1.0, 0.1, 0.0]);
    let quadrature: f64 = (0..6)
        .map(|k| simpson(|u| a[k] * u * u * u + b[k], 0.0, y[k], 64))
        .sum();
    assert_relative_eq!(spec.potential_eval(&y, &zero).unwrap(), quadrature, epsilon = 1e-10);
}

#[test]
fn potential_gradient_is_the_cost() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for spec in [fixtures::wheatstone::<f64>(), cubic_wheatstone()] {
        let zero = spec.zero_perturbation();
        for _ in 0..20 {
            let y = DVector::from_fn(6, |_, _| rng.random_range(0.05..1.0));
            let l = spec.cost_eval(&y, &zero).unwrap();
            let fd = mdpcg_testkit::fd_jacobian(
                |x| vec![spec.potential_eval(&DVector::from_column_slice(x), &zero).unwrap()],
                y.as_slice(),
                1e-6,
            );
            let err = (0..6).fold(0.0f64, |m, k| m.max((fd[0][k] - l[k]).abs()));
            assert!(err <= 1e-6 * l.amax(), "{err}");
        }
    }
}

#[test]
fn affine_jacobian_is_the_slope() {
    let spec = fixtures::wheatstone::<f64>();
    let zero = spec.zero_perturbation();
    let g = spec.cost_jacobian(&zero, &zero);
    assert_eq!(g, DMatrix::from_diagonal(&vec(&[9.0, 0.1, 0.1, 9.0, 0.1, 0.1])));
    assert_eq!(spec.perturbation_jacobian(&zero, &zero), DMatrix::identity(6, 6));
    let g = cubic_wheatstone().cost_jacobian(&DVector::from_element(6, 0.5), &zero);
    let fd = mdpcg_testkit::fd_jacobian(
        |x| cubic_wheatstone().cost_eval(&DVector::from_column_slice(x), &zero).unwrap().as_slice().to_vec(),
        &[0.5; 6],
        1e-6,
    );
    assert!((g - common::matrix(&fd)).amax() < 1e-7);
}
