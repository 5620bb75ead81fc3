//! Closed-form sensitivity of a strictly positive equilibrium.
//!
//! With `G = dl/dy`, `J = dl/deps` and `N = [E~^T, 1]`, differentiating the
//! KKT conditions gives
//!
//! ```text
//! d[nu; lambda]/deps = (N^T G^-1 N)^-1 N^T G^-1 J
//! dl*/deps           = N d[nu; lambda]/deps
//! dy*/deps           = G^-1 dl*/deps - G^-1 J
//! ```
//!
//! and the social cost `J(y, l) = y^T l` moves as `dy^T l + dl^T y`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::equilibrium::{positivity_threshold, solve, Equilibrium, SolverChoice};
use crate::error::{Error, Result};
use crate::game::{build_incidence, reduce_incidence, GameSpec};
use crate::linalg::{self, inf_norm, is_diagonal};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityResult<T: Real> {
    /// `dy*/deps`, K x K.
    pub dy_deps: DMatrix<T>,
    /// `dl*/deps`, K x K.
    pub dl_deps: DMatrix<T>,
    /// `d[nu*; lambda*]/deps`, S x K.
    pub ddual_deps: DMatrix<T>,
    /// Gradient of the social cost.
    pub dj_deps: DVector<T>,
    pub g: DMatrix<T>,
    pub j_mat: DMatrix<T>,
    pub n: DMatrix<T>,
}

impl<T: Real> SensitivityResult<T> {
    /// `|N^T dy|_inf`.
    pub fn feasibility_residual(&self) -> T {
        inf_norm((self.n.transpose() * &self.dy_deps).iter().copied())
    }

    /// `|G dy + J - dl|_inf`.
    pub fn stationarity_residual(&self) -> T {
        inf_norm((&self.g * &self.dy_deps + &self.j_mat - &self.dl_deps).iter().copied())
    }

    /// `|N d[nu; lambda] - dl|_inf`.
    pub fn consistency_residual(&self) -> T {
        inf_norm((&self.n * &self.ddual_deps - &self.dl_deps).iter().copied())
    }

    /// Largest distance of a column of `dl` from `range(N)`.
    pub fn range_residual(&self) -> T {
        let mut worst = T::zero();
        for col in self.dl_deps.column_iter() {
            let col = col.into_owned();
            let coef = linalg::least_squares(&self.n, &col);
            worst = worst.max((&self.n * coef - col).norm());
        }
        worst
    }

    /// Scale used to make the residuals relative: the largest entry of
    /// `G dy`, `J` and `dl`.
    pub fn scale(&self) -> T {
        inf_norm((&self.g * &self.dy_deps).iter().copied())
            .max(inf_norm(self.j_mat.iter().copied()))
            .max(inf_norm(self.dl_deps.iter().copied()))
            .max(T::one())
    }
}

pub(crate) struct ClosedForm<T: Real> {
    pub dy: DMatrix<T>,
    pub dl: DMatrix<T>,
    pub dw: DMatrix<T>,
}

/// Evaluates the closed form for generic `G`, `N`, `J`.
pub(crate) fn closed_form<T: Real>(g: &DMatrix<T>, n: &DMatrix<T>, j: &DMatrix<T>) -> Result<ClosedForm<T>> {
    let (ginv_n, ginv_j) = if is_diagonal(g) {
        let d = g.diagonal();
        if let Some(min) = d.iter().copied().find(|v| !(*v > T::zero())) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min.as_f64(),
            });
        }
        let mut ginv_n = n.clone();
        let mut ginv_j = j.clone();
        for (i, di) in d.iter().enumerate() {
            ginv_n.row_mut(i).unscale_mut(*di);
            ginv_j.row_mut(i).unscale_mut(*di);
        }
        (ginv_n, ginv_j)
    } else {
        let min = linalg::min_symmetric_eigenvalue(g);
        if !(min > T::zero()) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min.as_f64(),
            });
        }
        let lu = g.clone().lu();
        (
            lu.solve(n).ok_or(Error::SingularSystem)?,
            lu.solve(j).ok_or(Error::SingularSystem)?,
        )
    };
    let schur = n.transpose() * &ginv_n;
    let condition = linalg::condition_number(&schur);
    if !(condition <= 1e12) {
        return Err(Error::IllConditioned { condition });
    }
    let dw = schur
        .lu()
        .solve(&(n.transpose() * &ginv_j))
        .ok_or(Error::IllConditioned { condition })?;
    let dl = n * &dw;
    let dy = &ginv_n * &dw - ginv_j;
    Ok(ClosedForm { dy, dl, dw })
}

fn require_positive<T: Real>(spec: &GameSpec<T>, y: &DVector<T>) -> Result<()> {
    spec.check_len(y)?;
    let threshold = positivity_threshold(spec);
    match y.iter().enumerate().find(|(_, &v)| !(v > threshold)) {
        Some((index, &value)) => Err(Error::NotStrictlyPositive {
            index,
            value: value.as_f64(),
        }),
        None => Ok(()),
    }
}

/// All sensitivity Jacobians at `eq`.
pub fn sensitivity<T: Real>(
    spec: &GameSpec<T>,
    eq: &Equilibrium<T>,
    eps: &DVector<T>,
) -> Result<SensitivityResult<T>> {
    spec.check_len(eps)?;
    require_positive(spec, &eq.y)?;
    let n = reduce_incidence(&build_incidence(spec)?)?.constraint_matrix();
    let g = spec.cost_jacobian(&eq.y, eps);
    let j_mat = spec.perturbation_jacobian(&eq.y, eps);
    let cf = closed_form(&g, &n, &j_mat)?;
    let l = spec.cost_eval(&eq.y, eps)?;
    let dj_deps = cf.dy.transpose() * l + cf.dl.transpose() * &eq.y;
    Ok(SensitivityResult {
        dy_deps: cf.dy,
        dl_deps: cf.dl,
        ddual_deps: cf.dw,
        dj_deps,
        g,
        j_mat,
        n,
    })
}

pub fn flow_sensitivity<T: Real>(spec: &GameSpec<T>, eq: &Equilibrium<T>, eps: &DVector<T>) -> Result<DMatrix<T>> {
    Ok(sensitivity(spec, eq, eps)?.dy_deps)
}

pub fn cost_sensitivity<T: Real>(spec: &GameSpec<T>, eq: &Equilibrium<T>, eps: &DVector<T>) -> Result<DMatrix<T>> {
    Ok(sensitivity(spec, eq, eps)?.dl_deps)
}

/// Rows are `nu_1 .. nu_{S-1}` followed by `lambda`.
pub fn dual_sensitivity<T: Real>(spec: &GameSpec<T>, eq: &Equilibrium<T>, eps: &DVector<T>) -> Result<DMatrix<T>> {
    Ok(sensitivity(spec, eq, eps)?.ddual_deps)
}

pub fn social_cost_sensitivity<T: Real>(
    spec: &GameSpec<T>,
    eq: &Equilibrium<T>,
    eps: &DVector<T>,
) -> Result<DVector<T>> {
    Ok(sensitivity(spec, eq, eps)?.dj_deps)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BraessReport<T: Real> {
    /// Some cost increase lowers the social cost to first order.
    pub paradox_possible: bool,
    /// Unit direction in the nonnegative orthant with the most negative
    /// directional derivative (the normalized negative part of the
    /// gradient). Without a negative part, the coordinate with the smallest
    /// derivative.
    pub worst_direction: DVector<T>,
    pub predicted_rate: T,
    pub grad_j: DVector<T>,
}

impl<T: Real> BraessReport<T> {
    pub fn from_gradient(grad: &DVector<T>) -> Self {
        let k = grad.len();
        let scale = inf_norm(grad.iter().copied());
        let negative = grad.map(|v| if v < T::zero() { -v } else { T::zero() });
        let paradox_possible = k > 0 && grad.min() < -T::lit(1e-9) * scale;
        let (worst_direction, predicted_rate) = if paradox_possible {
            let norm = negative.norm();
            (negative / norm, -norm)
        } else if k == 0 {
            (DVector::zeros(0), T::zero())
        } else {
            let i = grad.imin();
            let mut e = DVector::zeros(k);
            e[i] = T::one();
            (e, grad[i])
        };
        Self {
            paradox_possible,
            worst_direction,
            predicted_rate,
            grad_j: grad.clone(),
        }
    }
}

pub fn detect_braess<T: Real>(spec: &GameSpec<T>, eq: &Equilibrium<T>, eps: &DVector<T>) -> Result<BraessReport<T>> {
    Ok(BraessReport::from_gradient(&social_cost_sensitivity(spec, eq, eps)?))
}

struct Probe<T: Real> {
    y: DVector<T>,
    l: DVector<T>,
    duals: DVector<T>,
    social: T,
}

fn probe<T: Real>(spec: &GameSpec<T>, eps: &DVector<T>) -> Result<Probe<T>> {
    let eq = solve(spec, eps, SolverChoice::Auto, T::tol(1e-12))?;
    let l = spec.cost_eval(&eq.y, eps)?;
    let mut duals = DVector::zeros(eq.nu.len() + 1);
    duals.rows_mut(0, eq.nu.len()).copy_from(&eq.nu);
    duals[eq.nu.len()] = eq.lambda;
    Ok(Probe {
        social: eq.y.dot(&l),
        y: eq.y,
        l,
        duals,
    })
}

/// Largest relative Frobenius discrepancy between the closed-form
/// Jacobians and central differences with step `h`, each game re-solved
/// from scratch at `eps +- h e_k`. The relative error of each Jacobian is
/// taken against `max(|closed form|_F, 1)`.
pub fn finite_difference_check<T: Real>(
    spec: &GameSpec<T>,
    eq: &Equilibrium<T>,
    eps: &DVector<T>,
    h: T,
) -> Result<T> {
    if !(h >= T::lit(1e-7) && h <= T::lit(1e-3)) {
        return Err(Error::InvalidArgument(format!("step {h} outside [1e-7, 1e-3]")));
    }
    let closed = sensitivity(spec, eq, eps)?;
    let k = spec.num_hyperarcs();
    let columns: Vec<Result<(Probe<T>, Probe<T>)>> = (0..k)
        .into_par_iter()
        .map(|i| {
            let mut plus = eps.clone();
            plus[i] += h;
            let mut minus = eps.clone();
            minus[i] -= h;
            Ok((probe(spec, &plus)?, probe(spec, &minus)?))
        })
        .collect();

    let s = closed.ddual_deps.nrows();
    let mut dy = DMatrix::zeros(k, k);
    let mut dl = DMatrix::zeros(k, k);
    let mut dw = DMatrix::zeros(s, k);
    let mut dj = DVector::zeros(k);
    let two_h = h + h;
    for (i, col) in columns.into_iter().enumerate() {
        let (p, m) = col?;
        dy.set_column(i, &((p.y - m.y) / two_h));
        dl.set_column(i, &((p.l - m.l) / two_h));
        dw.set_column(i, &((p.duals - m.duals) / two_h));
        dj[i] = (p.social - m.social) / two_h;
    }
    // Jacobians with norm below one are compared in absolute terms.
    let rel = |fd: T, cf: T| fd / cf.max(T::one());
    let worst = rel((dy - &closed.dy_deps).norm(), closed.dy_deps.norm())
        .max(rel((dl - &closed.dl_deps).norm(), closed.dl_deps.norm()))
        .max(rel((dw - &closed.ddual_deps).norm(), closed.ddual_deps.norm()))
        .max(rel((dj - &closed.dj_deps).norm(), closed.dj_deps.norm()));
    Ok(worst)
}
