//! The deterministic cycle game on the primal graph.
//!
//! Every hyperarc `(s, a)` spreads its mass over the primal edges
//! `s -> s'` with weights `P(s' | s, a)`, so `E = D T` where `D` is the
//! signed incidence of the primal graph and `T` the column-stochastic
//! spreading matrix. When `T` is invertible, `z = T y` maps equilibria of
//! the MDP game to equilibria of the cycle game with costs
//! `T^-T l(T^-1 z)`.

use nalgebra::{DMatrix, DVector};

use crate::equilibrium::{positivity_threshold, Equilibrium};
use crate::error::{Error, Result};
use crate::game::{build_incidence, GameSpec};
use crate::linalg::{self, inf_norm};
use crate::scalar::Real;
use crate::sensitivity::{closed_form, social_cost_sensitivity};

#[derive(Clone, Debug, PartialEq)]
pub struct PrimalGraph<T: Real> {
    /// `(tail, head)` pairs in order of first appearance over the
    /// hyperarcs.
    pub edges: Vec<(usize, usize)>,
    /// S x |edges|, `+1` at the tail and `-1` at the head.
    pub d: DMatrix<T>,
}

impl<T: Real> PrimalGraph<T> {
    pub fn edge_index(&self, tail: usize, head: usize) -> Option<usize> {
        self.edges.iter().position(|&e| e == (tail, head))
    }
}

/// Edges `s -> s'` for every positive transition probability.
///
/// With more than one state a self-loop transition has no signed incidence
/// column and is rejected. A single-state game has no edges at all.
pub fn derive_primal_graph<T: Real>(spec: &GameSpec<T>) -> Result<PrimalGraph<T>> {
    let s = spec.num_states();
    let mut edges = Vec::new();
    for (k, arc) in spec.hyperarcs().iter().enumerate() {
        for &(head, p) in &arc.heads {
            if !(p > T::zero()) {
                continue;
            }
            if head == arc.tail {
                if s > 1 {
                    return Err(Error::SelfLoopUnsupported {
                        state: arc.tail,
                        hyperarc: k,
                    });
                }
                continue;
            }
            if !edges.contains(&(arc.tail, head)) {
                edges.push((arc.tail, head));
            }
        }
    }
    let mut d = DMatrix::zeros(s, edges.len());
    for (j, &(tail, head)) in edges.iter().enumerate() {
        d[(tail, j)] = T::one();
        d[(head, j)] = -T::one();
    }
    Ok(PrimalGraph { edges, d })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transformation<T: Real> {
    /// |edges| x K.
    pub t: DMatrix<T>,
    pub invertible: bool,
    pub sigma_max: T,
    pub condition: f64,
    pub inverse: Option<DMatrix<T>>,
}

impl<T: Real> Transformation<T> {
    fn inverse_or_err(&self) -> Result<&DMatrix<T>> {
        self.inverse.as_ref().ok_or(Error::NotInvertible {
            edges: self.t.nrows(),
            hyperarcs: self.t.ncols(),
        })
    }
}

/// `T[(s1, s2), (s, a)] = P(s2 | s, a)` when `s1 = s`. Verifies `E = D T`.
pub fn build_transformation<T: Real>(spec: &GameSpec<T>, primal: &PrimalGraph<T>) -> Result<Transformation<T>> {
    let k = spec.num_hyperarcs();
    let mut t = DMatrix::zeros(primal.edges.len(), k);
    for (col, arc) in spec.hyperarcs().iter().enumerate() {
        for &(head, p) in &arc.heads {
            if let Some(row) = primal.edge_index(arc.tail, head) {
                t[(row, col)] += p;
            }
        }
    }
    let e = build_incidence(spec)?.full;
    let mismatch = inf_norm((&primal.d * &t - &e).iter().copied());
    if mismatch > T::tol(1e-12) {
        return Err(Error::InvalidSpec(format!(
            "primal graph does not reproduce the incidence matrix (error {mismatch})"
        )));
    }
    let sigma_max = linalg::spectral_norm(&t);
    let square = t.nrows() == k && k > 0;
    let condition = if square { linalg::condition_number(&t) } else { f64::INFINITY };
    let inverse = if square && condition < 1e12 {
        t.clone().try_inverse()
    } else {
        None
    };
    Ok(Transformation {
        invertible: inverse.is_some(),
        t,
        sigma_max,
        condition,
        inverse,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CycleEquilibrium<T: Real> {
    pub edges: Vec<(usize, usize)>,
    /// Edge flows `z = T y`.
    pub z: DVector<T>,
    /// Transformed costs `T^-T l(y)` at the equilibrium.
    pub edge_costs: DVector<T>,
    pub nu: DVector<T>,
    pub lambda: T,
    /// Infinity norm of the transformed KKT stack.
    pub kkt_residual: T,
    /// `|D z|_inf`.
    pub flow_residual: T,
}

fn reduced_d<T: Real>(d: &DMatrix<T>) -> DMatrix<T> {
    d.rows(0, d.nrows().saturating_sub(1)).into_owned()
}

fn require_positive<T: Real>(spec: &GameSpec<T>, eq: &Equilibrium<T>) -> Result<()> {
    let threshold = positivity_threshold(spec);
    match eq.y.iter().enumerate().find(|(_, &v)| !(v > threshold)) {
        Some((index, &value)) => Err(Error::NotStrictlyPositive {
            index,
            value: value.as_f64(),
        }),
        None => Ok(()),
    }
}

/// Maps `eq` to the cycle game and verifies its KKT conditions.
pub fn map_equilibrium<T: Real>(
    spec: &GameSpec<T>,
    eq: &Equilibrium<T>,
    eps: &DVector<T>,
    primal: &PrimalGraph<T>,
    transform: &Transformation<T>,
) -> Result<CycleEquilibrium<T>> {
    spec.check_len(&eq.y)?;
    spec.check_len(eps)?;
    let t_inv = transform.inverse_or_err()?;
    require_positive(spec, eq)?;
    let z = &transform.t * &eq.y;
    let y_back = t_inv * &z;
    let l = spec.cost_eval(&y_back, eps)?;
    let edge_costs = t_inv.transpose() * l;
    let m = z.len();
    let stationarity = &edge_costs
        - reduced_d(&primal.d).transpose() * &eq.nu
        - t_inv.transpose() * DVector::from_element(m, eq.lambda);
    let flow_residual = inf_norm((&primal.d * &z).iter().copied());
    let mass_residual = (y_back.sum() - spec.mass()).abs();
    let kkt_residual = inf_norm(stationarity.iter().copied())
        .max(flow_residual)
        .max(mass_residual);
    if kkt_residual > T::tol(1e-8) * spec.mass().max(T::one()) {
        return Err(Error::InvalidSpec(format!(
            "transformed KKT conditions violated (residual {kkt_residual})"
        )));
    }
    Ok(CycleEquilibrium {
        edges: primal.edges.clone(),
        z,
        edge_costs,
        nu: eq.nu.clone(),
        lambda: eq.lambda,
        kkt_residual,
        flow_residual,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck<T: Real> {
    /// `|grad J_c|_2`, computed on the transformed game.
    pub lhs: T,
    /// `|T|_2 |grad J|_2`.
    pub rhs: T,
    pub holds: bool,
    pub grad_cycle: DVector<T>,
    pub grad_mdp: DVector<T>,
    pub sigma_max: T,
}

/// Compares the social-cost sensitivity of the cycle game with that of the
/// MDP game scaled by `|T|_2`.
///
/// The cycle game is perturbed by `eps_c = T^-T eps`, so its cost Jacobians
/// are `G_c = T^-T G T^-1` and `J_c = T^-T J T^T`, with constraint matrix
/// `[D~^T, 1]`.
pub fn stochasticity_bound_check<T: Real>(
    spec: &GameSpec<T>,
    eq: &Equilibrium<T>,
    eps: &DVector<T>,
) -> Result<BoundCheck<T>> {
    spec.check_len(eps)?;
    let primal = derive_primal_graph(spec)?;
    let transform = build_transformation(spec, &primal)?;
    let t_inv = transform.inverse_or_err()?;
    require_positive(spec, eq)?;

    let grad_mdp = social_cost_sensitivity(spec, eq, eps)?;

    let t = &transform.t;
    let g = spec.cost_jacobian(&eq.y, eps);
    let j = spec.perturbation_jacobian(&eq.y, eps);
    let g_c = t_inv.transpose() * g * t_inv;
    let min_eig = linalg::min_symmetric_eigenvalue(&g_c);
    if !(min_eig > T::zero()) {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: min_eig.as_f64(),
        });
    }
    let j_c = t_inv.transpose() * j * t.transpose();
    let d_red = reduced_d(&primal.d);
    let m = t.nrows();
    let mut n_c = DMatrix::from_element(m, d_red.nrows() + 1, T::one());
    n_c.view_mut((0, 0), (m, d_red.nrows())).copy_from(&d_red.transpose());
    let cf = closed_form(&g_c, &n_c, &j_c)?;
    let z = t * &eq.y;
    let l_c = t_inv.transpose() * spec.cost_eval(&eq.y, eps)?;
    let grad_cycle = cf.dy.transpose() * l_c + cf.dl.transpose() * z;

    let lhs = grad_cycle.norm();
    let rhs = transform.sigma_max * grad_mdp.norm();
    Ok(BoundCheck {
        holds: lhs <= rhs * (T::one() + T::lit(1e-9)),
        lhs,
        rhs,
        grad_cycle,
        grad_mdp,
        sigma_max: transform.sigma_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve_interior_kkt;
    use crate::fixtures;

    #[test]
    fn three_state_cycle_matrices() {
        let spec = fixtures::three_state_cycle::<f64>();
        let primal = derive_primal_graph(&spec).unwrap();
        let d = DMatrix::from_row_slice(3, 4, &[0., -1., 0., 1., 1., 1., -1., 0., -1., 0., 1., -1.]);
        assert_eq!(primal.d, d);
        let t = build_transformation(&spec, &primal).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[0.4, 0., 0., 0., 0.6, 1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1.],
        );
        assert_eq!(t.t, expected);
        assert!(t.invertible);
        let inv = t.inverse.as_ref().unwrap();
        for col in inv.column_iter() {
            assert!((col.sum() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn mapping_satisfies_transformed_kkt() {
        let spec = fixtures::three_state_cycle::<f64>();
        let eps = spec.zero_perturbation();
        let eq = solve_interior_kkt(&spec, &eps).unwrap();
        let primal = derive_primal_graph(&spec).unwrap();
        let t = build_transformation(&spec, &primal).unwrap();
        let c = map_equilibrium(&spec, &eq, &eps, &primal, &t).unwrap();
        assert!(c.kkt_residual <= 1e-8);
        assert!(c.z.min() > 0.0);
        let bound = stochasticity_bound_check(&spec, &eq, &eps).unwrap();
        assert!(bound.holds);
        assert!((&bound.grad_cycle - &t.t * &bound.grad_mdp).amax() < 1e-9);
    }

    #[test]
    fn swap_is_its_own_cycle_game() {
        let spec = fixtures::swap::<f64>();
        let primal = derive_primal_graph(&spec).unwrap();
        assert_eq!(primal.d, DMatrix::from_row_slice(2, 2, &[1., -1., -1., 1.]));
        let t = build_transformation(&spec, &primal).unwrap();
        assert_eq!(t.t, DMatrix::identity(2, 2));
        assert!((t.sigma_max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wheatstone_edges() {
        let spec = fixtures::wheatstone::<f64>();
        let primal = derive_primal_graph(&spec).unwrap();
        assert_eq!(primal.edges, vec![(0, 1), (1, 3), (1, 2), (2, 3), (0, 2), (3, 0)]);
        let t = build_transformation(&spec, &primal).unwrap();
        assert!(t.invertible);
        assert!(t.sigma_max > 1.0);
    }

    #[test]
    fn self_loops() {
        let spec = fixtures::self_loop::<f64>();
        let primal = derive_primal_graph(&spec).unwrap();
        assert!(primal.edges.is_empty());
        let t = build_transformation(&spec, &primal).unwrap();
        assert!(!t.invertible);

        let spec = GameSpec::new(
            2,
            vec![
                crate::game::Hyperarc::new(0, "stay", vec![(0, 0.5), (1, 0.5)]),
                crate::game::Hyperarc::deterministic(1, "back", 0),
            ],
            crate::game::CostModel::affine(vec![1.0, 1.0], vec![0.0, 0.0]),
            1.0,
        )
        .unwrap();
        assert_eq!(
            derive_primal_graph(&spec).unwrap_err(),
            Error::SelfLoopUnsupported { state: 0, hyperarc: 0 }
        );
    }
}
