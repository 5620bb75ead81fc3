//! Equilibria along a ray of cost perturbations.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::equilibrium::{solve, SolverChoice};
use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::scalar::Real;
use crate::sensitivity::social_cost_sensitivity;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow<T: Real> {
    pub t: T,
    pub social_cost: T,
    pub lambda: T,
    pub y: DVector<T>,
    /// Directional derivative of the social cost along the sweep
    /// direction; `None` where the sensitivity is undefined.
    pub pred_dj: Option<T>,
    /// Every hyperarc carries positive mass and the sensitivity exists.
    pub assumption4_ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable<T: Real> {
    pub direction: DVector<T>,
    pub rows: Vec<SweepRow<T>>,
}

fn check_args<T: Real>(spec: &GameSpec<T>, base: &DVector<T>, direction: &DVector<T>, eps_max: T, steps: usize) -> Result<()> {
    spec.check_len(base)?;
    spec.check_len(direction)?;
    if direction.iter().any(|d| !(*d >= T::zero()) || !d.is_finite()) {
        return Err(Error::InvalidArgument("sweep direction must be finite and nonnegative".into()));
    }
    if !(eps_max >= T::zero()) || !eps_max.is_finite() {
        return Err(Error::InvalidArgument(format!("eps_max must be finite and nonnegative, got {eps_max}")));
    }
    if steps < 2 {
        return Err(Error::InvalidArgument(format!("steps must be at least 2, got {steps}")));
    }
    Ok(())
}

fn sweep_row<T: Real>(spec: &GameSpec<T>, eps: &DVector<T>, direction: &DVector<T>, t: T) -> Result<SweepRow<T>> {
    let eq = solve(spec, eps, SolverChoice::Auto, T::tol(1e-12))?;
    let social_cost = spec.social_cost(&eq.y, eps)?;
    let pred_dj = social_cost_sensitivity(spec, &eq, eps).ok().map(|g| g.dot(direction));
    Ok(SweepRow {
        t,
        social_cost,
        lambda: eq.lambda,
        y: eq.y,
        assumption4_ok: pred_dj.is_some(),
        pred_dj,
    })
}

/// Solves the game at `base + t_i direction` for `t_i = i eps_max / steps`,
/// `i = 0..=steps`, or only at `base` when `eps_max` is zero. Points are
/// solved in parallel; results are returned in index order, each with its
/// own outcome.
pub fn sweep_points<T: Real>(
    spec: &GameSpec<T>,
    base: &DVector<T>,
    direction: &DVector<T>,
    eps_max: T,
    steps: usize,
) -> Result<Vec<Result<SweepRow<T>>>> {
    check_args(spec, base, direction, eps_max, steps)?;
    let n = T::from_usize(steps).unwrap();
    let last = if eps_max == T::zero() { 0 } else { steps };
    Ok((0..=last)
        .into_par_iter()
        .map(|i| {
            let t = eps_max * T::from_usize(i).unwrap() / n;
            sweep_row(spec, &(base + direction * t), direction, t)
        })
        .collect())
}

/// Sweep from zero perturbation; the first solver failure aborts.
pub fn perturbation_sweep<T: Real>(
    spec: &GameSpec<T>,
    direction: &DVector<T>,
    eps_max: T,
    steps: usize,
) -> Result<SweepTable<T>> {
    let rows = sweep_points(spec, &spec.zero_perturbation(), direction, eps_max, steps)?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        direction: direction.clone(),
        rows,
    })
}
