//! Linear minimization over the feasible population set
//! `{y : E y = 0, 1^T y = M, y >= 0}`.
//!
//! Vertices of that polytope are stationary state-action distributions of
//! deterministic policies restricted to one recurrent class, scaled by the
//! mass. Minimizing `c^T y` is an average-cost MDP with stage costs `c`,
//! solved here by relative value iteration on the lazy chain
//! `(I + P) / 2`, which has the same gains and optimal policies but is
//! aperiodic.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::scalar::Real;

const MAX_SWEEPS: usize = 100_000;
const MAX_POWER_STEPS: usize = 1_000_000;

/// A vertex of the feasible set together with the policy that generates it.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleVertex<T: Real> {
    pub y: DVector<T>,
    /// Chosen hyperarc for every state.
    pub policy: Vec<usize>,
    /// States in the recurrent class carrying the mass.
    pub support: Vec<usize>,
    /// Long-run average cost per unit mass, `c^T y / M`.
    pub average_cost: T,
    pub sweeps: usize,
}

/// `argmin c^T y` over the feasible population set.
pub fn mdp_linear_oracle<T: Real>(spec: &GameSpec<T>, c: &DVector<T>) -> Result<DVector<T>> {
    linear_oracle(spec, c).map(|v| v.y)
}

pub fn linear_oracle<T: Real>(spec: &GameSpec<T>, c: &DVector<T>) -> Result<OracleVertex<T>> {
    spec.check_len(c)?;
    let s = spec.num_states();
    let half = T::lit(0.5);
    let scale = c.iter().fold(T::one(), |acc, v| acc.max(v.abs()));
    let tol = T::tol(1e-10) * scale;
    let actions: Vec<Vec<usize>> = (0..s).map(|st| spec.hyperarcs_at(st).collect()).collect();

    let q_value = |k: usize, h: &DVector<T>| -> T {
        let arc = &spec.hyperarcs()[k];
        let expected = arc
            .heads
            .iter()
            .fold(T::zero(), |acc, &(head, p)| acc + p * h[head]);
        c[k] + half * expected
    };

    let mut h = DVector::<T>::zeros(s);
    let mut span = T::max_value().unwrap_or(T::one());
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let next = DVector::from_fn(s, |st, _| {
            let best = actions[st]
                .iter()
                .map(|&k| q_value(k, &h))
                .fold(T::max_value().unwrap(), T::min);
            best + half * h[st]
        });
        let diff = &next - &h;
        span = diff.max() - diff.min();
        let anchor = next[0];
        h = next.map(|v| v - anchor);
        if span < tol {
            break;
        }
    }
    if !(span < tol) {
        return Err(Error::OracleNoConverge {
            sweeps,
            span: span.as_f64(),
        });
    }

    let policy: Vec<usize> = actions
        .iter()
        .map(|ks| {
            let mut best = ks[0];
            let mut best_q = q_value(best, &h);
            for &k in &ks[1..] {
                let q = q_value(k, &h);
                if q < best_q {
                    best = k;
                    best_q = q;
                }
            }
            best
        })
        .collect();

    let mut chain = DMatrix::<T>::zeros(s, s);
    for (st, &k) in policy.iter().enumerate() {
        for &(head, p) in &spec.hyperarcs()[k].heads {
            chain[(st, head)] += p;
        }
    }

    let mut best: Option<(T, Vec<usize>, DVector<T>)> = None;
    for class in recurrent_classes(&chain) {
        let sub = DMatrix::from_fn(class.len(), class.len(), |i, j| chain[(class[i], class[j])]);
        let x = stationary_distribution(&sub);
        let avg = class
            .iter()
            .zip(x.iter())
            .fold(T::zero(), |acc, (&st, &xs)| acc + xs * c[policy[st]]);
        if best.as_ref().is_none_or(|(b, _, _)| avg < *b) {
            best = Some((avg, class, x));
        }
    }
    let (average_cost, support, x) = best.expect("a finite chain has a recurrent class");

    let mut y = DVector::zeros(spec.num_hyperarcs());
    for (&st, &xs) in support.iter().zip(x.iter()) {
        y[policy[st]] = xs * spec.mass();
    }
    Ok(OracleVertex {
        y,
        policy,
        support,
        average_cost,
        sweeps,
    })
}

/// Closed communicating classes of a row-stochastic matrix, each sorted.
pub(crate) fn recurrent_classes<T: Real>(chain: &DMatrix<T>) -> Vec<Vec<usize>> {
    let n = chain.nrows();
    let mut graph = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if chain[(i, j)] > T::zero() {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut component = vec![0; n];
    let sccs = tarjan_scc(&graph);
    for (c, members) in sccs.iter().enumerate() {
        for node in members {
            component[node.index()] = c;
        }
    }
    let mut classes: Vec<Vec<usize>> = sccs
        .iter()
        .enumerate()
        .filter(|(c, members)| {
            members.iter().all(|node| {
                let i = node.index();
                (0..n).all(|j| chain[(i, j)] == T::zero() || component[j] == *c)
            })
        })
        .map(|(_, members)| {
            let mut v: Vec<usize> = members.iter().map(|n| n.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    classes.sort();
    classes
}

/// Stationary distribution of an irreducible row-stochastic matrix by power
/// iteration on the lazy chain, stopping at an `l1` residual of `1e-12`.
pub fn stationary_distribution<T: Real>(chain: &DMatrix<T>) -> DVector<T> {
    let n = chain.nrows();
    let half = T::lit(0.5);
    let tol = T::tol(1e-12);
    let mut x = DVector::from_element(n, T::one() / T::from_usize(n).unwrap());
    let transposed = chain.transpose();
    for _ in 0..MAX_POWER_STEPS {
        let next = (&x + &transposed * &x) * half;
        let residual = (&next - &x).lp_norm(1);
        x = &next / next.sum();
        if residual < tol {
            return x;
        }
    }
    direct_stationary(chain).unwrap_or(x)
}

fn direct_stationary<T: Real>(chain: &DMatrix<T>) -> Option<DVector<T>> {
    let n = chain.nrows();
    let mut a = chain.transpose() - DMatrix::identity(n, n);
    a.row_mut(n - 1).fill(T::one());
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = T::one();
    a.lu().solve(&rhs)
}
