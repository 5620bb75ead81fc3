//! MDP congestion games on directed hypergraphs.
//!
//! A game is a set of hyperarcs (one per state-action pair), a transition
//! kernel giving each hyperarc's distribution over head states, a
//! congestion cost model and a total population mass. Hyperarcs keep the
//! order they were given in; every vector and matrix indexed by hyperarc
//! uses that order.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use petgraph::algo::kosaraju_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

/// One state-action pair: the tail state, an action label and the
/// distribution over next states.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperarc<T> {
    pub tail: usize,
    pub action: String,
    /// `(head state, probability)` pairs in the order they were declared.
    pub heads: Vec<(usize, T)>,
}

impl<T: Real> Hyperarc<T> {
    pub fn new(tail: usize, action: impl Into<String>, heads: Vec<(usize, T)>) -> Self {
        Self {
            tail,
            action: action.into(),
            heads,
        }
    }

    pub fn deterministic(tail: usize, action: impl Into<String>, head: usize) -> Self {
        Self::new(tail, action, vec![(head, T::one())])
    }

    /// Transition probability into `state`.
    pub fn prob(&self, state: usize) -> T {
        self.heads
            .iter()
            .filter(|(s, _)| *s == state)
            .fold(T::zero(), |acc, (_, p)| acc + *p)
    }
}

/// Differentiable, perturbation-dependent cost `l(y, eps)`.
///
/// Implementations must be defined on all of `R^K` (solvers may probe
/// slightly negative flows during Newton steps).
pub trait CostFunction<T: Real>: Send + Sync + fmt::Debug {
    fn cost(&self, y: &DVector<T>, eps: &DVector<T>) -> DVector<T>;

    /// `d l / d y`, a `K x K` matrix.
    fn jacobian_y(&self, y: &DVector<T>, eps: &DVector<T>) -> DMatrix<T>;

    /// `d l / d eps`. Defaults to the additive model `l + eps`.
    fn jacobian_eps(&self, y: &DVector<T>, _eps: &DVector<T>) -> DMatrix<T> {
        DMatrix::identity(y.len(), y.len())
    }
}

/// Separable power-law cost `l_k(y) = a_k * y_k^p + b_k + eps_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerCost<T> {
    pub coeff: DVector<T>,
    pub intercept: DVector<T>,
    pub power: i32,
}

impl<T: Real> CostFunction<T> for PowerCost<T> {
    fn cost(&self, y: &DVector<T>, eps: &DVector<T>) -> DVector<T> {
        DVector::from_fn(y.len(), |k, _| {
            self.coeff[k] * y[k].powi(self.power) + self.intercept[k] + eps[k]
        })
    }

    fn jacobian_y(&self, y: &DVector<T>, _eps: &DVector<T>) -> DMatrix<T> {
        let p = T::from_i32(self.power).unwrap();
        DMatrix::from_diagonal(&DVector::from_fn(y.len(), |k, _| {
            p * self.coeff[k] * y[k].powi(self.power - 1)
        }))
    }
}

#[derive(Clone, Debug)]
pub enum CostModel<T: Real> {
    /// `l_k(y) = slope_k * y_k + intercept_k + eps_k`.
    Affine {
        slope: DVector<T>,
        intercept: DVector<T>,
    },
    General(Arc<dyn CostFunction<T>>),
}

impl<T: Real> CostModel<T> {
    pub fn affine(slope: Vec<T>, intercept: Vec<T>) -> Self {
        CostModel::Affine {
            slope: DVector::from_vec(slope),
            intercept: DVector::from_vec(intercept),
        }
    }

    pub fn general(f: impl CostFunction<T> + 'static) -> Self {
        CostModel::General(Arc::new(f))
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, CostModel::Affine { .. })
    }

    pub(crate) fn eval(&self, y: &DVector<T>, eps: &DVector<T>) -> DVector<T> {
        match self {
            CostModel::Affine { slope, intercept } => slope.component_mul(y) + intercept + eps,
            CostModel::General(f) => f.cost(y, eps),
        }
    }

    pub(crate) fn jacobian_y(&self, y: &DVector<T>, eps: &DVector<T>) -> DMatrix<T> {
        match self {
            CostModel::Affine { slope, .. } => DMatrix::from_diagonal(slope),
            CostModel::General(f) => f.jacobian_y(y, eps),
        }
    }

    pub(crate) fn jacobian_eps(&self, y: &DVector<T>, eps: &DVector<T>) -> DMatrix<T> {
        match self {
            CostModel::Affine { .. } => DMatrix::identity(y.len(), y.len()),
            CostModel::General(f) => f.jacobian_eps(y, eps),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GameSpec<T: Real> {
    num_states: usize,
    hyperarcs: Vec<Hyperarc<T>>,
    costs: CostModel<T>,
    mass: T,
}

impl<T: Real> GameSpec<T> {
    /// Validates and builds a game. States are 0-based.
    ///
    /// Head distributions within `1e-12` of summing to one are renormalized;
    /// larger deviations are rejected.
    pub fn new(
        num_states: usize,
        mut hyperarcs: Vec<Hyperarc<T>>,
        costs: CostModel<T>,
        mass: T,
    ) -> Result<Self> {
        if num_states == 0 {
            return Err(Error::InvalidSpec("a game needs at least one state".into()));
        }
        if !(mass > T::zero()) || !mass.is_finite() {
            return Err(Error::InvalidSpec(format!("mass must be positive, got {mass}")));
        }
        let mut has_action = vec![false; num_states];
        for (k, arc) in hyperarcs.iter_mut().enumerate() {
            if arc.tail >= num_states {
                return Err(Error::InvalidSpec(format!(
                    "hyperarc {k} has tail {} outside 0..{num_states}",
                    arc.tail
                )));
            }
            has_action[arc.tail] = true;
            if arc.heads.is_empty() {
                return Err(Error::InvalidSpec(format!("hyperarc {k} has no head states")));
            }
            let mut seen = vec![false; num_states];
            for &(head, p) in &arc.heads {
                if head >= num_states {
                    return Err(Error::InvalidSpec(format!(
                        "hyperarc {k} has head {head} outside 0..{num_states}"
                    )));
                }
                if seen[head] {
                    return Err(Error::InvalidSpec(format!(
                        "hyperarc {k} lists head {head} twice"
                    )));
                }
                seen[head] = true;
                if !(p >= T::zero()) || !p.is_finite() {
                    return Err(Error::InvalidSpec(format!(
                        "hyperarc {k} has invalid probability {p} for head {head}"
                    )));
                }
            }
            let sum = arc.heads.iter().fold(T::zero(), |acc, (_, p)| acc + *p);
            if (sum - T::one()).abs() > T::tol(1e-12) {
                return Err(Error::KernelNotStochastic {
                    hyperarc: k,
                    sum: sum.as_f64(),
                });
            }
            if sum != T::one() {
                for (_, p) in arc.heads.iter_mut() {
                    *p /= sum;
                }
            }
        }
        if let Some(s) = has_action.iter().position(|&a| !a) {
            return Err(Error::InvalidSpec(format!("state {s} has no actions")));
        }
        check_cost_dims(&costs, hyperarcs.len())?;
        Ok(Self {
            num_states,
            hyperarcs,
            costs,
            mass,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Number of hyperarcs (state-action pairs), `K`.
    pub fn num_hyperarcs(&self) -> usize {
        self.hyperarcs.len()
    }

    pub fn hyperarcs(&self) -> &[Hyperarc<T>] {
        &self.hyperarcs
    }

    pub fn costs(&self) -> &CostModel<T> {
        &self.costs
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    /// Hyperarc indices whose tail is `state`, in declaration order.
    pub fn hyperarcs_at(&self, state: usize) -> impl Iterator<Item = usize> + '_ {
        self.hyperarcs
            .iter()
            .enumerate()
            .filter(move |(_, a)| a.tail == state)
            .map(|(k, _)| k)
    }

    /// Action labels available at `state`.
    pub fn actions(&self, state: usize) -> Vec<&str> {
        self.hyperarcs_at(state)
            .map(|k| self.hyperarcs[k].action.as_str())
            .collect()
    }

    /// Transition probability `P[next, k]` of landing in `next` from hyperarc `k`.
    pub fn transition(&self, next: usize, k: usize) -> T {
        self.hyperarcs[k].prob(next)
    }

    /// Dense `S x K` transition matrix.
    pub fn kernel(&self) -> DMatrix<T> {
        let mut p = DMatrix::zeros(self.num_states, self.num_hyperarcs());
        for (k, arc) in self.hyperarcs.iter().enumerate() {
            for &(head, prob) in &arc.heads {
                p[(head, k)] += prob;
            }
        }
        p
    }

    pub fn zero_perturbation(&self) -> DVector<T> {
        DVector::zeros(self.num_hyperarcs())
    }

    /// Same hypergraph and mass with a different cost model.
    pub fn with_costs(&self, costs: CostModel<T>) -> Result<Self> {
        check_cost_dims(&costs, self.num_hyperarcs())?;
        Ok(Self {
            costs,
            ..self.clone()
        })
    }

    pub fn with_mass(&self, mass: T) -> Result<Self> {
        Self::new(self.num_states, self.hyperarcs.clone(), self.costs.clone(), mass)
    }

    pub(crate) fn check_len(&self, v: &DVector<T>) -> Result<()> {
        if v.len() != self.num_hyperarcs() {
            return Err(Error::DimensionMismatch {
                expected: self.num_hyperarcs(),
                found: v.len(),
            });
        }
        Ok(())
    }

    fn check_mass(&self, y: &DVector<T>) -> Result<()> {
        self.check_len(y)?;
        if let Some((index, &value)) = y
            .iter()
            .enumerate()
            .find(|(_, &v)| v < -T::tol(1e-12) || !v.is_finite())
        {
            return Err(Error::NegativeMass {
                index,
                value: value.as_f64(),
            });
        }
        Ok(())
    }

    /// Costs `l(y, eps)`.
    pub fn cost_eval(&self, y: &DVector<T>, eps: &DVector<T>) -> Result<DVector<T>> {
        self.check_mass(y)?;
        self.check_len(eps)?;
        Ok(self.costs.eval(y, eps))
    }

    /// Potential `sum_k int_0^{y_k} l_k(u, eps) du`.
    ///
    /// Closed form for affine costs. For general costs the line integral
    /// `int_0^1 l(t y, eps)^T y dt` is evaluated by adaptive Simpson
    /// quadrature (absolute tolerance `1e-10`); it coincides with the
    /// coordinate-wise sum whenever the cost is separable.
    pub fn potential_eval(&self, y: &DVector<T>, eps: &DVector<T>) -> Result<T> {
        self.check_mass(y)?;
        self.check_len(eps)?;
        Ok(match &self.costs {
            CostModel::Affine { slope, intercept } => {
                let quad = slope
                    .iter()
                    .zip(y.iter())
                    .fold(T::zero(), |acc, (a, v)| acc + *a * *v * *v);
                quad * T::lit(0.5) + (intercept + eps).dot(y)
            }
            CostModel::General(f) => {
                let integrand = |t: T| f.cost(&(y * t), eps).dot(y);
                adaptive_simpson(&integrand, T::zero(), T::one(), T::tol(1e-10))
            }
        })
    }

    /// Cost Jacobian `G = d l / d y`.
    pub fn cost_jacobian(&self, y: &DVector<T>, eps: &DVector<T>) -> DMatrix<T> {
        self.costs.jacobian_y(y, eps)
    }

    /// Perturbation Jacobian `J = d l / d eps`.
    pub fn perturbation_jacobian(&self, y: &DVector<T>, eps: &DVector<T>) -> DMatrix<T> {
        self.costs.jacobian_eps(y, eps)
    }

    /// Social cost `y^T l(y, eps)`.
    pub fn social_cost(&self, y: &DVector<T>, eps: &DVector<T>) -> Result<T> {
        Ok(y.dot(&self.cost_eval(y, eps)?))
    }
}

fn check_cost_dims<T: Real>(costs: &CostModel<T>, k: usize) -> Result<()> {
    if let CostModel::Affine { slope, intercept } = costs {
        for v in [slope, intercept] {
            if v.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: v.len(),
                });
            }
        }
    }
    Ok(())
}

fn adaptive_simpson<T: Real>(f: &impl Fn(T) -> T, a: T, b: T, tol: T) -> T {
    let two = T::lit(2.0);
    let m = (a + b) / two;
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<T: Real>(
    f: &impl Fn(T) -> T,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> T {
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    let four = T::lit(4.0);
    let m = (a + b) / two;
    let (lm, rm) = ((a + m) / two, (m + b) / two);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / six * (fa + four * flm + fm);
    let right = (b - m) / six * (fm + four * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= T::lit(15.0) * tol {
        return left + right + delta / T::lit(15.0);
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / two, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / two, depth - 1)
}

/// Hypergraph incidence matrix `E` and its reduced form with one row removed.
#[derive(Clone, Debug, PartialEq)]
pub struct IncidenceMatrix<T: Real> {
    /// `S x K`, entries `1 - P[s, k]` at the tail and `-P[s', k]` elsewhere.
    pub full: DMatrix<T>,
    /// `(S-1) x K`, `full` without `removed_row`.
    pub reduced: DMatrix<T>,
    pub removed_row: usize,
}

impl<T: Real> IncidenceMatrix<T> {
    /// `N = [E_reduced^T, 1]`, the `K x S` constraint matrix of the reduced KKT system.
    pub fn constraint_matrix(&self) -> DMatrix<T> {
        let k = self.full.ncols();
        let rows = self.reduced.nrows();
        let mut n = DMatrix::from_element(k, rows + 1, T::one());
        n.view_mut((0, 0), (k, rows)).copy_from(&self.reduced.transpose());
        n
    }
}

/// Builds `E = I_S (x) 1^T - P` in hyperarc order; the last state's row is
/// dropped for the reduced form.
pub fn build_incidence<T: Real>(spec: &GameSpec<T>) -> Result<IncidenceMatrix<T>> {
    let s = spec.num_states();
    let mut full = -spec.kernel();
    for (k, arc) in spec.hyperarcs().iter().enumerate() {
        full[(arc.tail, k)] += T::one();
    }
    for (k, col) in full.column_iter().enumerate() {
        let sum = col.sum();
        if sum.abs() > T::tol(1e-12) {
            return Err(Error::KernelNotStochastic {
                hyperarc: k,
                sum: (T::one() - sum).as_f64(),
            });
        }
    }
    let removed_row = s - 1;
    let reduced = full.clone().remove_row(removed_row);
    Ok(IncidenceMatrix {
        full,
        reduced,
        removed_row,
    })
}

/// Drops the last row of `E`, checking that `E` has rank `S - 1` so the
/// reduced matrix has full row rank.
pub fn reduce_incidence<T: Real>(e: &IncidenceMatrix<T>) -> Result<IncidenceMatrix<T>> {
    let s = e.full.nrows();
    let rank = linalg::numerical_rank(&e.full);
    if rank < s - 1 {
        return Err(Error::RankDeficient {
            rank,
            expected: s - 1,
        });
    }
    let removed_row = s - 1;
    Ok(IncidenceMatrix {
        full: e.full.clone(),
        reduced: e.full.clone().remove_row(removed_row),
        removed_row,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub strongly_connected: bool,
    pub incidence_rank: usize,
    pub rank_ok: bool,
    pub costs_monotone: bool,
    pub kernel_stochastic: bool,
    pub messages: Vec<String>,
}

impl ValidationReport {
    pub fn all_ok(&self) -> bool {
        self.strongly_connected && self.rank_ok && self.costs_monotone && self.kernel_stochastic
    }
}

/// Checks strong connectivity of the primal graph, the incidence rank and
/// cost monotonicity. Never fails; findings are reported.
pub fn validate_assumptions<T: Real>(spec: &GameSpec<T>) -> ValidationReport {
    let s = spec.num_states();
    let mut messages = Vec::new();

    let mut graph = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..s).map(|_| graph.add_node(())).collect();
    for arc in spec.hyperarcs() {
        for &(head, p) in &arc.heads {
            if p > T::zero() && head != arc.tail {
                graph.update_edge(nodes[arc.tail], nodes[head], ());
            }
        }
    }
    let components = kosaraju_scc(&graph);
    let strongly_connected = components.len() == 1;
    if !strongly_connected {
        messages.push(format!(
            "primal graph has {} strongly connected components",
            components.len()
        ));
    }

    let mut kernel_stochastic = true;
    for (k, arc) in spec.hyperarcs().iter().enumerate() {
        let sum = arc.heads.iter().fold(T::zero(), |acc, (_, p)| acc + *p);
        let negative = arc.heads.iter().any(|(_, p)| *p < T::zero());
        if (sum - T::one()).abs() > T::tol(1e-12) || negative {
            kernel_stochastic = false;
            messages.push(format!("hyperarc {k} is not a probability distribution (sum {sum})"));
        }
    }

    let (incidence_rank, rank_ok) = match build_incidence(spec) {
        Ok(e) => {
            let rank = linalg::numerical_rank(&e.full);
            (rank, rank == s - 1)
        }
        Err(_) => (0, false),
    };
    if !rank_ok {
        messages.push(format!(
            "incidence matrix has rank {incidence_rank}, expected {}",
            s - 1
        ));
    }

    let costs_monotone = match spec.costs() {
        CostModel::Affine { slope, .. } => {
            let bad: Vec<usize> = slope
                .iter()
                .enumerate()
                .filter(|(_, a)| !(**a > T::zero()))
                .map(|(k, _)| k)
                .collect();
            for k in &bad {
                messages.push(format!("hyperarc {k} has non-positive slope {}", slope[*k]));
            }
            bad.is_empty()
        }
        CostModel::General(f) => {
            let k = T::from_usize(spec.num_hyperarcs()).unwrap();
            let y = DVector::from_element(spec.num_hyperarcs(), spec.mass() / k);
            let eps = spec.zero_perturbation();
            let min_eig = linalg::min_symmetric_eigenvalue(&f.jacobian_y(&y, &eps));
            if !(min_eig > T::zero()) {
                messages.push(format!(
                    "cost Jacobian at the uniform distribution has min eigenvalue {min_eig}"
                ));
            }
            min_eig > T::zero()
        }
    };

    ValidationReport {
        strongly_connected,
        incidence_rank,
        rank_ok,
        costs_monotone,
        kernel_stochastic,
        messages,
    }
}
