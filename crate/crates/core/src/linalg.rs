//! Small dense helpers shared by the estimators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Maximum absolute row sum.
pub(crate) fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `a x = b` for symmetric positive definite `a`.
pub(crate) fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().cholesky().map(|c| c.solve(b))
}

/// Solves `a x = b` with partial-pivoting LU; `None` when `a` is singular.
pub(crate) fn solve_general(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let lu = a.clone().lu();
    if !lu.is_invertible() {
        return None;
    }
    lu.solve(b)
}

/// Ratio of extreme eigenvalues of a symmetric matrix; infinite when the
/// smallest eigenvalue is not positive.
pub(crate) fn sym_condition_number(a: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(a.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Smallest eigenvalue of a symmetric matrix.
#[cfg(test)]
pub(crate) fn sym_min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.clone()).eigenvalues.min()
}

/// `a^{-1/2}` for symmetric positive definite `a`.
pub(crate) fn sym_inv_sqrt(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let eig = SymmetricEigen::new(a.clone());
    if eig.eigenvalues.min() <= 0.0 {
        return None;
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    Some(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}
