//! Dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Real;

pub(crate) fn singular_values<T: Real>(m: &DMatrix<T>) -> DVector<T> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DVector::zeros(0);
    }
    m.clone().svd(false, false).singular_values
}

fn rank_threshold<T: Real>(m: &DMatrix<T>, sigma_max: T) -> T {
    let dim = T::from_usize(m.nrows().max(m.ncols())).unwrap();
    dim * sigma_max * T::tol(1e-12)
}

/// Numerical rank with singular-value threshold `max(r, c) * sigma_max * 1e-12`.
pub fn numerical_rank<T: Real>(m: &DMatrix<T>) -> usize {
    let sv = singular_values(m);
    let sigma_max = sv.iter().copied().fold(T::zero(), T::max);
    if sigma_max == T::zero() {
        return 0;
    }
    let threshold = rank_threshold(m, sigma_max);
    sv.iter().filter(|&&s| s > threshold).count()
}

/// 2-norm condition number; infinite when the matrix is singular.
pub fn condition_number<T: Real>(m: &DMatrix<T>) -> f64 {
    let sv = singular_values(m);
    if sv.is_empty() {
        return 1.0;
    }
    let max = sv.max().as_f64();
    let min = sv.min().as_f64();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn spectral_norm<T: Real>(m: &DMatrix<T>) -> T {
    singular_values(m).iter().copied().fold(T::zero(), T::max)
}

/// Orthonormal basis of the null space of `m`, one column per basis vector.
pub fn null_space<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    let n = m.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // Pad with zero rows so the SVD returns a full set of right singular vectors.
    let rows = m.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let sigma_max = svd.singular_values.iter().copied().fold(T::zero(), T::max);
    let threshold = if sigma_max == T::zero() {
        T::zero()
    } else {
        rank_threshold(m, sigma_max)
    };
    let cols: Vec<DVector<T>> = (0..v_t.nrows())
        .filter(|&i| svd.singular_values[i] <= threshold)
        .map(|i| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Smallest eigenvalue of the symmetric part `(m + m^T) / 2`.
pub fn min_symmetric_eigenvalue<T: Real>(m: &DMatrix<T>) -> T {
    if m.nrows() == 0 {
        return T::zero();
    }
    let sym = (m + m.transpose()) * T::lit(0.5);
    sym.symmetric_eigenvalues().min()
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn least_squares<T: Real>(a: &DMatrix<T>, b: &DVector<T>) -> DVector<T> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    if a.nrows() == 0 {
        return DVector::zeros(a.ncols());
    }
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().copied().fold(T::zero(), T::max);
    let threshold = rank_threshold(a, sigma_max);
    svd.solve(b, threshold).expect("U and V were computed")
}

/// Returns true if every entry of `m` is zero off the diagonal.
pub(crate) fn is_diagonal<T: Real>(m: &DMatrix<T>) -> bool {
    m.row_iter().enumerate().all(|(i, row)| {
        row.iter()
            .enumerate()
            .all(|(j, &v)| i == j || v == T::zero())
    })
}

pub(crate) fn inf_norm<T: Real>(v: impl IntoIterator<Item = T>) -> T {
    v.into_iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_incidence_like_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert_eq!(numerical_rank(&m), 1);
        assert_eq!(numerical_rank(&DMatrix::<f64>::zeros(2, 2)), 0);
        assert_eq!(numerical_rank(&DMatrix::<f64>::zeros(0, 3)), 0);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let z = null_space(&m);
        assert_eq!(z.ncols(), 2);
        assert!((&m * &z).abs().max() < 1e-12);
        let gram = z.transpose() * &z;
        assert!((gram - DMatrix::identity(2, 2)).abs().max() < 1e-12);
    }

    #[test]
    fn least_squares_handles_rank_deficiency() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let x = least_squares(&a, &DVector::from_vec(vec![2.0, 2.0]));
        assert!((x - DVector::from_vec(vec![1.0, 1.0])).abs().max() < 1e-12);
    }

    #[test]
    fn diagonal_detection() {
        assert!(is_diagonal(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]))));
        assert!(!is_diagonal(&DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0])));
    }
}
