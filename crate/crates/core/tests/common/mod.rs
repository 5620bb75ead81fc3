#![allow(dead_code)]

use mdpcg::{CostModel, Game};
use mdpcg_testkit::{AffineGame, Arc};
use nalgebra::{DMatrix, DVector};

pub fn to_oracle(spec: &Game) -> AffineGame {
    let (slope, intercept) = match spec.costs() {
        CostModel::Affine { slope, intercept } => (slope.clone(), intercept.clone()),
        CostModel::General(_) => panic!("oracle games have affine costs"),
    };
    AffineGame {
        states: spec.num_states(),
        arcs: spec
            .hyperarcs()
            .iter()
            .map(|h| Arc {
                tail: h.tail,
                heads: h.heads.clone(),
            })
            .collect(),
        slope: slope.iter().copied().collect(),
        intercept: intercept.iter().copied().collect(),
        mass: spec.mass(),
    }
}

pub fn vec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

pub fn matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}

pub fn max_diff(a: &DVector<f64>, b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
