//! Reference games and seeded random generators.

use rand::Rng;

use crate::equilibrium::solve_interior_kkt;
use crate::game::{CostModel, GameSpec, Hyperarc};
use crate::scalar::Real;

fn lits<T: Real>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

fn wheatstone_arcs<T: Real>() -> Vec<Hyperarc<T>> {
    vec![
        Hyperarc::deterministic(0, "a1", 1),
        Hyperarc::deterministic(1, "a2", 3),
        Hyperarc::new(1, "a3", vec![(2, T::lit(0.9)), (3, T::lit(0.1))]),
        Hyperarc::deterministic(2, "a4", 3),
        Hyperarc::deterministic(0, "a5", 2),
        Hyperarc::deterministic(3, "a6", 0),
    ]
}

/// Four-state Wheatstone hypergraph with one stochastic bridge hyperarc
/// (`s2 -> {s3: 0.9, s4: 0.1}`), affine costs and unit mass.
pub fn wheatstone<T: Real>() -> GameSpec<T> {
    GameSpec::new(
        4,
        wheatstone_arcs(),
        CostModel::affine(
            lits(&[9.0, 0.1, 0.1, 9.0, 0.1, 0.1]),
            lits(&[1.0, 1.0, 0.0, 1.0, 0.1, 0.0]),
        ),
        T::one(),
    )
    .expect("valid fixture")
}

/// Wheatstone hypergraph with costs and mass chosen so that every hyperarc
/// carries mass at equilibrium and the bridge exhibits a Braess paradox.
pub fn wheatstone_interior<T: Real>() -> GameSpec<T> {
    GameSpec::new(
        4,
        wheatstone_arcs(),
        CostModel::affine(
            lits(&[2.0, 0.5, 0.1, 2.0, 0.5, 0.1]),
            lits(&[0.5, 1.0, 0.1, 1.0, 2.0, 1.0]),
        ),
        T::lit(10.0),
    )
    .expect("valid fixture")
}

/// Three states `A, B, C` with one stochastic action at `B` spreading mass
/// `0.4 / 0.6` over `B -> C` and `B -> A`; costs `l_k(y) = y + k/10`.
pub fn three_state_cycle<T: Real>() -> GameSpec<T> {
    GameSpec::new(
        3,
        vec![
            Hyperarc::new(1, "split", vec![(2, T::lit(0.4)), (0, T::lit(0.6))]),
            Hyperarc::deterministic(1, "to_a", 0),
            Hyperarc::deterministic(2, "to_b", 1),
            Hyperarc::deterministic(0, "to_c", 2),
        ],
        CostModel::affine(lits(&[1.0; 4]), lits(&[0.1, 0.2, 0.3, 0.4])),
        T::one(),
    )
    .expect("valid fixture")
}

/// Two states swapping deterministically, `l_i(y) = y + b_i`, mass 2.
pub fn swap_with_intercepts<T: Real>(b: [f64; 2]) -> GameSpec<T> {
    GameSpec::new(
        2,
        vec![
            Hyperarc::deterministic(0, "go", 1),
            Hyperarc::deterministic(1, "go", 0),
        ],
        CostModel::affine(lits(&[1.0, 1.0]), lits(&b)),
        T::lit(2.0),
    )
    .expect("valid fixture")
}

pub fn swap<T: Real>() -> GameSpec<T> {
    swap_with_intercepts([0.0, 0.0])
}

/// One state with a single self-loop, `l(y) = y + 1`, unit mass.
pub fn self_loop<T: Real>() -> GameSpec<T> {
    GameSpec::new(
        1,
        vec![Hyperarc::deterministic(0, "stay", 0)],
        CostModel::affine(vec![T::one()], vec![T::one()]),
        T::one(),
    )
    .expect("valid fixture")
}

/// Strongly connected game on `states` states: a deterministic ring plus up
/// to two extra stochastic actions per state (no self-loops), slopes in
/// `[0.5, 2]`, intercepts in `[0, 1]` and mass `2K`.
pub fn random_game<T: Real>(rng: &mut impl Rng, states: usize) -> GameSpec<T> {
    let mut arcs = Vec::new();
    for s in 0..states {
        arcs.push(Hyperarc::deterministic(s, "ring", (s + 1) % states));
        for a in 0..rng.random_range(0..=2) {
            let others: Vec<usize> = (0..states).filter(|&t| t != s).collect();
            let fanout = rng.random_range(1..=others.len().min(3));
            let mut heads: Vec<usize> = Vec::new();
            while heads.len() < fanout {
                let t = others[rng.random_range(0..others.len())];
                if !heads.contains(&t) {
                    heads.push(t);
                }
            }
            let weights: Vec<f64> = heads.iter().map(|_| rng.random_range(0.2..1.0)).collect();
            let total: f64 = weights.iter().sum();
            let heads = heads
                .into_iter()
                .zip(weights)
                .map(|(t, w)| (t, T::lit(w / total)))
                .collect();
            arcs.push(Hyperarc::new(s, format!("x{a}"), heads));
        }
    }
    let k = arcs.len();
    let slope = (0..k).map(|_| T::lit(rng.random_range(0.5..2.0))).collect();
    let intercept = (0..k).map(|_| T::lit(rng.random_range(0.0..1.0))).collect();
    GameSpec::new(
        states,
        arcs,
        CostModel::affine(slope, intercept),
        T::lit(2.0 * k as f64),
    )
    .expect("generated game is valid")
}

/// Draws random 3-5 state games until one has a strictly positive
/// equilibrium.
pub fn random_interior_game<T: Real>(rng: &mut impl Rng) -> GameSpec<T> {
    loop {
        let states = rng.random_range(3..=5);
        let spec = random_game(rng, states);
        if solve_interior_kkt(&spec, &spec.zero_perturbation()).is_ok() {
            return spec;
        }
    }
}

/// Ring game where some states get an extra stochastic action splitting
/// mass between the ring successor and one chord target. The primal graph
/// then has exactly one edge per hyperarc and the edge/hyperarc
/// transformation is invertible. Redraws until the equilibrium is
/// strictly positive.
pub fn random_invertible_cycle_game<T: Real>(rng: &mut impl Rng) -> GameSpec<T> {
    loop {
        let states = rng.random_range(3..=5);
        let mut arcs = Vec::new();
        for s in 0..states {
            let next = (s + 1) % states;
            arcs.push(Hyperarc::deterministic(s, "ring", next));
            if rng.random_bool(0.6) {
                let chords: Vec<usize> = (0..states).filter(|&t| t != s && t != next).collect();
                let target = chords[rng.random_range(0..chords.len())];
                let p = rng.random_range(0.2..0.8);
                arcs.push(Hyperarc::new(
                    s,
                    "split",
                    vec![(target, T::lit(p)), (next, T::lit(1.0 - p))],
                ));
            }
        }
        if arcs.len() == states {
            continue;
        }
        let k = arcs.len();
        let slope = (0..k).map(|_| T::lit(rng.random_range(0.5..2.0))).collect();
        let intercept = (0..k).map(|_| T::lit(rng.random_range(0.0..1.0))).collect();
        let spec = GameSpec::new(
            states,
            arcs,
            CostModel::affine(slope, intercept),
            T::lit(2.0 * k as f64),
        )
        .expect("generated game is valid");
        if solve_interior_kkt(&spec, &spec.zero_perturbation()).is_ok() {
            return spec;
        }
    }
}
