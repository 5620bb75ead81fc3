//! Wardrop equilibria as minimizers of the congestion potential.
//!
//! Two solvers are provided:
//!
//! * [`solve_interior_kkt`] solves the equality-constrained KKT system
//!   `[G, -N; N^T, 0] [y; nu; lambda] = [-b - eps; 0; M]` directly. It is
//!   exact for affine costs whenever the equilibrium puts mass on every
//!   hyperarc, and reports [`Error::NotInterior`] otherwise.
//! * [`solve_frank_wolfe`] runs conditional gradient steps against the MDP
//!   linear oracle. Periodically the current support is polished: the
//!   potential is minimized exactly on the face spanned by the support
//!   (Newton in the null space of the active constraints) with a small
//!   active-set loop that drops hyperarcs driven negative and re-adds
//!   hyperarcs with negative multipliers. An accepted polish is certified
//!   by the Frank-Wolfe gap like any other iterate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::game::{build_incidence, reduce_incidence, CostModel, GameSpec, IncidenceMatrix};
use crate::linalg::{self, inf_norm};
use crate::oracle::mdp_linear_oracle;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    InteriorKkt,
    FrankWolfe,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::InteriorKkt => "interior_kkt",
            SolverKind::FrankWolfe => "frank_wolfe",
        }
    }
}

/// Solver selection for [`solve`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SolverChoice {
    /// Interior KKT for affine costs, falling back to Frank-Wolfe.
    #[default]
    Auto,
    Kkt,
    FrankWolfe,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Equilibrium<T: Real> {
    /// Population distribution over hyperarcs.
    pub y: DVector<T>,
    /// State potentials relative to the removed incidence row (`S - 1` entries).
    pub nu: DVector<T>,
    /// Average cost per unit mass.
    pub lambda: T,
    /// Multipliers of `y >= 0`.
    pub mu: DVector<T>,
    pub kkt_residual: T,
    pub wardrop_gap: T,
    pub solver: SolverKind,
    pub iterations: usize,
}

impl<T: Real> Equilibrium<T> {
    /// Smallest entry of `y`.
    pub fn min_mass(&self) -> T {
        self.y.min()
    }

    /// True when every hyperarc carries more than `1e-9 * M / K`.
    pub fn is_strictly_positive(&self, spec: &GameSpec<T>) -> bool {
        self.y.min() > positivity_threshold(spec)
    }
}

pub(crate) fn positivity_threshold<T: Real>(spec: &GameSpec<T>) -> T {
    T::tol(1e-9) * spec.mass() / T::from_usize(spec.num_hyperarcs()).unwrap()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Duals<T: Real> {
    pub nu: DVector<T>,
    pub lambda: T,
    pub mu: DVector<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KktReport<T> {
    /// Infinity norm of `(l - E~^T nu - lambda 1 - mu; E~ y; 1^T y - M; mu^T y)`.
    pub residual: T,
    pub min_y: T,
    pub min_mu: T,
}

fn incidence<T: Real>(spec: &GameSpec<T>) -> Result<IncidenceMatrix<T>> {
    reduce_incidence(&build_incidence(spec)?)
}

/// Direct solve of the equality-constrained KKT system for affine costs.
pub fn solve_interior_kkt<T: Real>(spec: &GameSpec<T>, eps: &DVector<T>) -> Result<Equilibrium<T>> {
    spec.check_len(eps)?;
    let (slope, intercept) = match spec.costs() {
        CostModel::Affine { slope, intercept } => (slope, intercept),
        CostModel::General(_) => return Err(Error::RequiresAffineCosts),
    };
    if slope.iter().any(|a| !(*a > T::zero())) {
        return Err(Error::SingularSystem);
    }
    let inc = incidence(spec).map_err(|e| match e {
        Error::RankDeficient { .. } => Error::SingularSystem,
        other => other,
    })?;
    let k = spec.num_hyperarcs();
    let s = spec.num_states();
    let n = inc.constraint_matrix();

    let mut system = DMatrix::<T>::zeros(k + s, k + s);
    system
        .view_mut((0, 0), (k, k))
        .copy_from(&DMatrix::from_diagonal(slope));
    system.view_mut((0, k), (k, s)).copy_from(&(-&n));
    system.view_mut((k, 0), (s, k)).copy_from(&n.transpose());
    let mut rhs = DVector::<T>::zeros(k + s);
    rhs.rows_mut(0, k).copy_from(&(-(intercept + eps)));
    rhs[k + s - 1] = spec.mass();

    let sol = system.lu().solve(&rhs).ok_or(Error::SingularSystem)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    let y = sol.rows(0, k).into_owned();
    let nu = sol.rows(k, s - 1).into_owned();
    let lambda = sol[k + s - 1];

    let threshold = positivity_threshold(spec);
    if let Some((index, &value)) = y.iter().enumerate().find(|(_, &v)| !(v > threshold)) {
        return Err(Error::NotInterior {
            index,
            value: value.as_f64(),
        });
    }
    finish(spec, eps, y, Duals { nu, lambda, mu: DVector::zeros(k) }, SolverKind::InteriorKkt, 1)
}

fn finish<T: Real>(
    spec: &GameSpec<T>,
    eps: &DVector<T>,
    y: DVector<T>,
    duals: Duals<T>,
    solver: SolverKind,
    iterations: usize,
) -> Result<Equilibrium<T>> {
    let wardrop_gap = wardrop_gap(spec, &y, eps)?;
    let mut eq = Equilibrium {
        y,
        nu: duals.nu,
        lambda: duals.lambda,
        mu: duals.mu,
        kkt_residual: T::zero(),
        wardrop_gap,
        solver,
        iterations,
    };
    eq.kkt_residual = kkt_residual(spec, &eq, eps).residual;
    Ok(eq)
}

/// Least-squares multipliers for `y`, with `mu` clipped at zero.
///
/// Returns the duals and the smallest unclipped multiplier.
pub fn fit_duals<T: Real>(spec: &GameSpec<T>, y: &DVector<T>, eps: &DVector<T>) -> Result<(Duals<T>, T)> {
    let inc = incidence(spec)?;
    fit_duals_with(spec, &inc, y, eps)
}

fn fit_duals_with<T: Real>(
    spec: &GameSpec<T>,
    inc: &IncidenceMatrix<T>,
    y: &DVector<T>,
    eps: &DVector<T>,
) -> Result<(Duals<T>, T)> {
    spec.check_len(y)?;
    let k = spec.num_hyperarcs();
    let l = spec.costs().eval(y, eps);
    let lambda = y.dot(&l) / spec.mass();
    let cut = T::tol(1e-7) * spec.mass() / T::from_usize(k).unwrap();
    let support: Vec<usize> = (0..k).filter(|&i| y[i] > cut).collect();
    let et = inc.reduced.transpose();
    let a = et.select_rows(support.iter());
    let rhs = DVector::from_iterator(support.len(), support.iter().map(|&i| l[i] - lambda));
    let nu = linalg::least_squares(&a, &rhs);
    let raw = &l - &et * &nu - DVector::from_element(k, lambda);
    let min_raw = raw.min();
    let mu = raw.map(|v| v.max(T::zero()));
    Ok((Duals { nu, lambda, mu }, min_raw))
}

/// `lambda = y^T l / M`, `nu` by least squares on the support of `y`, and
/// `mu = l - E~^T nu - lambda 1` clipped at zero.
///
/// Fails with [`Error::NegativeMultiplier`] if some multiplier is below
/// `-1e-6 * max|l|`, i.e. `y` is not an equilibrium.
pub fn recover_duals<T: Real>(spec: &GameSpec<T>, y: &DVector<T>, eps: &DVector<T>) -> Result<Duals<T>> {
    let inc = incidence(spec)?;
    recover_duals_with(spec, &inc, y, eps)
}

fn recover_duals_with<T: Real>(
    spec: &GameSpec<T>,
    inc: &IncidenceMatrix<T>,
    y: &DVector<T>,
    eps: &DVector<T>,
) -> Result<Duals<T>> {
    let (duals, _) = fit_duals_with(spec, inc, y, eps)?;
    let l = spec.costs().eval(y, eps);
    let scale = inf_norm(l.iter().copied()).max(T::tol(1e-12));
    let raw = &l - inc.reduced.transpose() * &duals.nu - DVector::from_element(l.len(), duals.lambda);
    if let Some((index, &value)) = raw
        .iter()
        .enumerate()
        .find(|(_, &v)| v < -T::tol(1e-6) * scale)
    {
        return Err(Error::NegativeMultiplier {
            index,
            value: value.as_f64(),
        });
    }
    Ok(duals)
}

pub fn kkt_residual<T: Real>(spec: &GameSpec<T>, eq: &Equilibrium<T>, eps: &DVector<T>) -> KktReport<T> {
    let inc = match incidence(spec) {
        Ok(inc) => inc,
        Err(_) => {
            return KktReport {
                residual: T::max_value().unwrap(),
                min_y: eq.y.min(),
                min_mu: eq.mu.min(),
            }
        }
    };
    let l = spec.costs().eval(&eq.y, eps);
    let k = l.len();
    let stationarity =
        &l - inc.reduced.transpose() * &eq.nu - DVector::from_element(k, eq.lambda) - &eq.mu;
    let flow = &inc.reduced * &eq.y;
    let residual = inf_norm(stationarity.iter().copied())
        .max(inf_norm(flow.iter().copied()))
        .max((eq.y.sum() - spec.mass()).abs())
        .max(eq.mu.dot(&eq.y).abs());
    KktReport {
        residual,
        min_y: eq.y.min(),
        min_mu: if eq.mu.is_empty() { T::zero() } else { eq.mu.min() },
    }
}

/// Variational-inequality gap `l(y)^T y - min_{y' feasible} l(y)^T y'`.
pub fn wardrop_gap<T: Real>(spec: &GameSpec<T>, y: &DVector<T>, eps: &DVector<T>) -> Result<T> {
    let l = spec.cost_eval(y, eps)?;
    let vertex = mdp_linear_oracle(spec, &l)?;
    Ok(l.dot(y) - l.dot(&vertex))
}

/// Conditional-gradient iteration on the congestion potential.
pub struct FrankWolfe<'a, T: Real> {
    spec: &'a GameSpec<T>,
    eps: &'a DVector<T>,
    inc: IncidenceMatrix<T>,
    y: DVector<T>,
    iterations: usize,
    pending: Option<(T, DVector<T>)>,
}

impl<'a, T: Real> FrankWolfe<'a, T> {
    /// Starts from the oracle vertex for the zero-flow costs `l(0, eps)`.
    pub fn new(spec: &'a GameSpec<T>, eps: &'a DVector<T>) -> Result<Self> {
        spec.check_len(eps)?;
        let start = mdp_linear_oracle(spec, &spec.costs().eval(&spec.zero_perturbation(), eps))?;
        Self::from_point(spec, eps, start)
    }

    /// Starts from a feasible point `y0`.
    pub fn from_point(spec: &'a GameSpec<T>, eps: &'a DVector<T>, y0: DVector<T>) -> Result<Self> {
        spec.check_len(eps)?;
        spec.check_len(&y0)?;
        let inc = incidence(spec)?;
        check_feasible(spec, &inc, &y0)?;
        Ok(Self {
            spec,
            eps,
            inc,
            y: y0,
            iterations: 0,
            pending: None,
        })
    }

    pub fn y(&self) -> &DVector<T> {
        &self.y
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn potential(&self) -> Result<T> {
        self.spec.potential_eval(&self.y.map(|v| v.max(T::zero())), self.eps)
    }

    /// Frank-Wolfe gap `l(y)^T (y - s)` at the current iterate, where `s`
    /// is the oracle vertex for `l(y)`.
    pub fn gap(&mut self) -> Result<T> {
        if let Some((gap, _)) = &self.pending {
            return Ok(*gap);
        }
        let l = self.spec.costs().eval(&self.y, self.eps);
        let vertex = mdp_linear_oracle(self.spec, &l)?;
        check_feasible(self.spec, &self.inc, &vertex)?;
        let gap = l.dot(&(&self.y - &vertex));
        self.pending = Some((gap, vertex));
        Ok(gap)
    }

    /// Moves toward the current oracle vertex and returns the step size.
    pub fn advance(&mut self) -> Result<T> {
        self.gap()?;
        let (gap, vertex) = self.pending.take().expect("gap computed");
        let d = &vertex - &self.y;
        let step = match self.spec.costs() {
            CostModel::Affine { slope, .. } => {
                let curvature = d
                    .iter()
                    .zip(slope.iter())
                    .fold(T::zero(), |acc, (di, a)| acc + *a * *di * *di);
                if curvature > T::zero() {
                    (gap / curvature).max(T::zero()).min(T::one())
                } else if gap > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            CostModel::General(_) => T::lit(2.0) / T::from_usize(self.iterations + 2).unwrap(),
        };
        self.y += d * step;
        self.iterations += 1;
        Ok(step)
    }

    fn replace(&mut self, y: DVector<T>) {
        self.y = y;
        self.pending = None;
    }
}

fn check_feasible<T: Real>(spec: &GameSpec<T>, inc: &IncidenceMatrix<T>, y: &DVector<T>) -> Result<()> {
    let m = spec.mass();
    let violation = inf_norm((&inc.full * y).iter().copied())
        .max((y.sum() - m).abs())
        .max((-y.min()).max(T::zero()));
    if violation > T::tol(1e-8) * m {
        return Err(Error::DegenerateOracle {
            violation: violation.as_f64(),
        });
    }
    Ok(())
}

/// Frank-Wolfe from the oracle vertex of the zero-flow costs.
///
/// Stops once the gap is at most `tol * M * max(1, |lambda|)`.
pub fn solve_frank_wolfe<T: Real>(
    spec: &GameSpec<T>,
    eps: &DVector<T>,
    tol: T,
    max_iter: usize,
) -> Result<Equilibrium<T>> {
    let fw = FrankWolfe::new(spec, eps)?;
    run_frank_wolfe(fw, tol, max_iter)
}

/// Frank-Wolfe from a given feasible starting point.
pub fn solve_frank_wolfe_from<T: Real>(
    spec: &GameSpec<T>,
    eps: &DVector<T>,
    y0: DVector<T>,
    tol: T,
    max_iter: usize,
) -> Result<Equilibrium<T>> {
    let fw = FrankWolfe::from_point(spec, eps, y0)?;
    run_frank_wolfe(fw, tol, max_iter)
}

fn run_frank_wolfe<T: Real>(mut fw: FrankWolfe<'_, T>, tol: T, max_iter: usize) -> Result<Equilibrium<T>> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let spec = fw.spec;
    let eps = fw.eps;
    let m = spec.mass();
    let target = |y: &DVector<T>| {
        let lambda = spec.costs().eval(y, eps).dot(y) / m;
        tol * m * lambda.abs().max(T::one())
    };
    loop {
        let gap = fw.gap()?;
        if gap <= target(&fw.y) {
            break;
        }
        if fw.iterations >= max_iter {
            return Err(Error::MaxIterations {
                iterations: fw.iterations,
                gap: gap.as_f64(),
            });
        }
        if fw.iterations % 10 == 3 {
            if let Some(candidate) = polish(spec, eps, &fw.inc, &fw.y) {
                let l = spec.costs().eval(&candidate, eps);
                let vertex = mdp_linear_oracle(spec, &l)?;
                let candidate_gap = l.dot(&(&candidate - &vertex));
                if candidate_gap < gap {
                    fw.replace(candidate);
                    continue;
                }
            }
        }
        fw.advance()?;
    }
    let iterations = fw.iterations;
    let y = fw.y.map(|v| v.max(T::zero()));
    let duals = recover_duals_with(spec, &fw.inc, &y, eps)?;
    finish(spec, eps, y, duals, SolverKind::FrankWolfe, iterations)
}

/// Exact minimization of the potential on the face spanned by the support
/// of `y`, with an active-set correction of the support.
fn polish<T: Real>(
    spec: &GameSpec<T>,
    eps: &DVector<T>,
    inc: &IncidenceMatrix<T>,
    y: &DVector<T>,
) -> Option<DVector<T>> {
    let k = spec.num_hyperarcs();
    let cut = T::tol(1e-6) * spec.mass() / T::from_usize(k).unwrap();
    let mut support: Vec<bool> = y.iter().map(|&v| v > cut).collect();
    let mut start = y.clone();
    for _ in 0..3 * k {
        let candidate = minimize_on_support(spec, eps, inc, &support, &start)?;
        let (worst, worst_value) = (0..k)
            .filter(|&i| support[i])
            .map(|i| (i, candidate[i]))
            .fold((usize::MAX, T::max_value().unwrap()), |acc, (i, v)| {
                if v < acc.1 {
                    (i, v)
                } else {
                    acc
                }
            });
        if worst != usize::MAX && !(worst_value > T::zero()) {
            support[worst] = false;
            continue;
        }
        let (duals, _) = fit_duals_with(spec, inc, &candidate, eps).ok()?;
        let l = spec.costs().eval(&candidate, eps);
        let raw = &l - inc.reduced.transpose() * &duals.nu - DVector::from_element(k, duals.lambda);
        let scale = inf_norm(l.iter().copied()).max(T::one());
        let entering = (0..k)
            .filter(|&i| !support[i])
            .map(|i| (i, raw[i]))
            .filter(|(_, v)| *v < -T::tol(1e-10) * scale)
            .fold(None, |acc: Option<(usize, T)>, (i, v)| match acc {
                Some((_, best)) if best <= v => acc,
                _ => Some((i, v)),
            });
        match entering {
            Some((i, _)) => {
                support[i] = true;
                start = candidate;
            }
            None => return Some(candidate.map(|v| v.max(T::zero()))),
        }
    }
    None
}

/// Newton iteration in the null space of the constraints restricted to the
/// hyperarcs in `support`; all other hyperarcs are held at zero.
fn minimize_on_support<T: Real>(
    spec: &GameSpec<T>,
    eps: &DVector<T>,
    inc: &IncidenceMatrix<T>,
    support: &[bool],
    start: &DVector<T>,
) -> Option<DVector<T>> {
    let k = spec.num_hyperarcs();
    let idx: Vec<usize> = (0..k).filter(|&i| support[i]).collect();
    if idx.is_empty() {
        return None;
    }
    let rows = inc.reduced.nrows();
    let mut constraints = DMatrix::<T>::from_element(rows + 1, k, T::one());
    constraints.view_mut((0, 0), (rows, k)).copy_from(&inc.reduced);
    let c = constraints.select_columns(idx.iter());
    let mut rhs = DVector::<T>::zeros(rows + 1);
    rhs[rows] = spec.mass();

    let mut ys = DVector::from_iterator(idx.len(), idx.iter().map(|&i| start[i].max(T::zero())));
    let correction = linalg::least_squares(&c, &(&c * &ys - &rhs));
    ys -= correction;
    if inf_norm((&c * &ys - &rhs).iter().copied()) > T::tol(1e-10) * spec.mass() {
        return None;
    }
    let expand = |ys: &DVector<T>| {
        let mut full = DVector::zeros(k);
        for (j, &i) in idx.iter().enumerate() {
            full[i] = ys[j];
        }
        full
    };
    let z = linalg::null_space(&c);
    if z.ncols() == 0 {
        return Some(expand(&ys));
    }
    let reduced_gradient = |ys: &DVector<T>| -> DVector<T> {
        let l = spec.costs().eval(&expand(ys), eps);
        let ls = DVector::from_iterator(idx.len(), idx.iter().map(|&i| l[i]));
        z.transpose() * ls
    };
    let scale = inf_norm(spec.costs().eval(&expand(&ys), eps).iter().copied()).max(T::one());
    let mut g = reduced_gradient(&ys);
    for _ in 0..50 {
        let g_norm = g.norm();
        if g_norm <= T::tol(1e-13) * scale {
            break;
        }
        let full_hessian = spec.costs().jacobian_y(&expand(&ys), eps);
        let hs = full_hessian.select_rows(idx.iter()).select_columns(idx.iter());
        let h = z.transpose() * hs * &z;
        let delta = h.lu().solve(&(-&g))?;
        let direction = &z * delta;
        let mut t = T::one();
        loop {
            let trial = &ys + &direction * t;
            let g_trial = reduced_gradient(&trial);
            if g_trial.norm() <= (T::one() - T::lit(1e-4) * t) * g_norm || t < T::lit(1e-8) {
                ys = trial;
                g = g_trial;
                break;
            }
            t *= T::lit(0.5);
        }
    }
    Some(expand(&ys))
}

/// Solves the game with the chosen method.
pub fn solve<T: Real>(
    spec: &GameSpec<T>,
    eps: &DVector<T>,
    choice: SolverChoice,
    tol: T,
) -> Result<Equilibrium<T>> {
    const MAX_ITER: usize = 100_000;
    match choice {
        SolverChoice::Kkt => solve_interior_kkt(spec, eps),
        SolverChoice::FrankWolfe => solve_frank_wolfe(spec, eps, tol, MAX_ITER),
        SolverChoice::Auto => {
            if spec.costs().is_affine() {
                match solve_interior_kkt(spec, eps) {
                    Err(Error::NotInterior { .. }) => solve_frank_wolfe(spec, eps, tol, MAX_ITER),
                    other => other,
                }
            } else {
                solve_frank_wolfe(spec, eps, tol, MAX_ITER)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_relative_eq;

    fn zero(spec: &GameSpec<f64>) -> DVector<f64> {
        spec.zero_perturbation()
    }

    #[test]
    fn three_state_cycle_interior_solution() {
        let spec = fixtures::three_state_cycle::<f64>();
        let eq = solve_interior_kkt(&spec, &zero(&spec)).unwrap();
        let expected = [0.25724638, 0.11038647, 0.36763285, 0.2647343];
        for (a, b) in eq.y.iter().zip(expected) {
            assert_relative_eq!(*a, b, epsilon = 1e-8);
        }
        assert_relative_eq!(eq.lambda, 0.54758454, epsilon = 1e-8);
        assert_relative_eq!(eq.nu[0], 0.11714976, epsilon = 1e-8);
        assert_relative_eq!(eq.nu[1], -0.12004831, epsilon = 1e-8);
        assert!(eq.kkt_residual < 1e-12);
        assert!(eq.wardrop_gap.abs() < 1e-12);
    }

    #[test]
    fn wheatstone_equilibrium_is_on_the_boundary() {
        let spec = fixtures::wheatstone::<f64>();
        let err = solve_interior_kkt(&spec, &zero(&spec)).unwrap_err();
        assert!(matches!(err, Error::NotInterior { .. }));
        let eq = solve_frank_wolfe(&spec, &zero(&spec), 1e-12, 10_000).unwrap();
        let expected = [32.0, 32.0, 0.0, 59.0, 59.0, 91.0].map(|v| v / 273.0);
        for (a, b) in eq.y.iter().zip(expected) {
            assert_relative_eq!(*a, b, epsilon = 1e-10);
        }
        assert!(eq.kkt_residual < 1e-10);
        assert!(eq.mu[2] > 0.0);
    }

    #[test]
    fn solvers_agree_on_interior_games() {
        for spec in [fixtures::three_state_cycle::<f64>(), fixtures::wheatstone_interior()] {
            let eps = zero(&spec);
            let a = solve_interior_kkt(&spec, &eps).unwrap();
            let b = solve_frank_wolfe(&spec, &eps, 1e-12, 10_000).unwrap();
            assert!((&a.y - &b.y).amax() < 1e-8);
            assert_relative_eq!(a.lambda, b.lambda, epsilon = 1e-8);
        }
    }

    #[test]
    fn pinned_flows() {
        let spec = fixtures::swap::<f64>();
        let eq = solve(&spec, &zero(&spec), SolverChoice::Auto, 1e-10).unwrap();
        assert_relative_eq!(eq.y[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(eq.y[1], 1.0, epsilon = 1e-12);

        let spec = fixtures::self_loop::<f64>();
        let eq = solve(&spec, &zero(&spec), SolverChoice::FrankWolfe, 1e-10).unwrap();
        assert_relative_eq!(eq.y[0], 1.0);
        assert_relative_eq!(eq.lambda, 2.0);
    }

    #[test]
    fn duals_are_recovered_from_the_flow() {
        let spec = fixtures::three_state_cycle::<f64>();
        let eps = zero(&spec);
        let eq = solve_interior_kkt(&spec, &eps).unwrap();
        let duals = recover_duals(&spec, &eq.y, &eps).unwrap();
        assert!((&duals.nu - &eq.nu).amax() < 1e-10);
        assert_relative_eq!(duals.lambda, eq.lambda, epsilon = 1e-12);
    }

    #[test]
    fn non_equilibrium_flow_has_negative_multiplier() {
        let spec = fixtures::wheatstone::<f64>();
        let eps = zero(&spec);
        // All mass on the cycle s1 -> s3 -> s4 -> s1.
        let y = DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]) / 3.0;
        assert!(matches!(
            recover_duals(&spec, &y, &eps),
            Err(Error::NegativeMultiplier { .. })
        ));
        assert!(wardrop_gap(&spec, &y, &eps).unwrap() > 1e-3);
    }

    #[test]
    fn frank_wolfe_needs_positive_tolerance() {
        let spec = fixtures::swap::<f64>();
        assert!(matches!(
            solve_frank_wolfe(&spec, &zero(&spec), 0.0, 10),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn kkt_solver_rejects_general_costs() {
        let spec = fixtures::swap::<f64>();
        let spec = spec
            .with_costs(CostModel::general(crate::game::PowerCost {
                coeff: DVector::from_element(2, 1.0),
                intercept: DVector::zeros(2),
                power: 3,
            }))
            .unwrap();
        assert_eq!(
            solve_interior_kkt(&spec, &zero(&spec)).unwrap_err(),
            Error::RequiresAffineCosts
        );
    }

    #[test]
    fn potential_decreases_along_frank_wolfe() {
        let spec = fixtures::wheatstone::<f64>();
        let eps = zero(&spec);
        let mut fw = FrankWolfe::new(&spec, &eps).unwrap();
        let mut last = fw.potential().unwrap();
        for _ in 0..50 {
            fw.advance().unwrap();
            let now = fw.potential().unwrap();
            assert!(now <= last + 1e-12);
            last = now;
        }
    }
}
