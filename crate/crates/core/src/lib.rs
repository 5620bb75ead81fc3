//! Wardrop equilibria of non-atomic MDP congestion games on directed
//! hypergraphs, with closed-form sensitivity of the equilibrium flows,
//! costs and social cost to cost perturbations.
//!
//! The numerical core is generic over the scalar type ([`Real`], implemented
//! for `f32` and `f64`); the aliases at the crate root fix it to `f64`.

// Negated comparisons are deliberate: they treat NaN as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cycle;
pub mod equilibrium;
pub mod error;
pub mod fixtures;
pub mod game;
pub mod linalg;
pub mod oracle;
pub mod scalar;
pub mod sensitivity;
pub mod sweep;

pub use crate::cycle::{
    derive_primal_graph, build_transformation, map_equilibrium, stochasticity_bound_check,
    BoundCheck, CycleEquilibrium, PrimalGraph, Transformation,
};
pub use crate::equilibrium::{
    fit_duals, kkt_residual, recover_duals, solve, solve_frank_wolfe, solve_frank_wolfe_from,
    solve_interior_kkt, wardrop_gap, Duals, Equilibrium, FrankWolfe, KktReport, SolverChoice,
    SolverKind,
};
pub use crate::error::{Error, Result};
pub use crate::game::{
    build_incidence, reduce_incidence, validate_assumptions, CostFunction, CostModel, GameSpec,
    Hyperarc, IncidenceMatrix, PowerCost, ValidationReport,
};
pub use crate::oracle::{linear_oracle, mdp_linear_oracle, OracleVertex};
pub use crate::scalar::Real;
pub use crate::sensitivity::{
    cost_sensitivity, detect_braess, dual_sensitivity, finite_difference_check, flow_sensitivity,
    sensitivity, social_cost_sensitivity, BraessReport, SensitivityResult,
};
pub use crate::sweep::{perturbation_sweep, sweep_points, SweepRow, SweepTable};

pub type Game = GameSpec<f64>;
pub type Game32 = GameSpec<f32>;
pub type Incidence = IncidenceMatrix<f64>;
pub type WardropEquilibrium = Equilibrium<f64>;
pub type Sensitivity = SensitivityResult<f64>;
pub type Braess = BraessReport<f64>;
pub type CycleGame = CycleEquilibrium<f64>;
