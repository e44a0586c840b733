//! Thin wrappers around the dense symmetric eigensolver.
//!
//! Everything downstream wants eigenpairs in a fixed order with a fixed
//! sign convention, so both live here rather than being re-derived at
//! every call site.

use nalgebra::{DMatrix, DVector};

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending,
/// eigenvectors as matching columns.
pub fn eigh_ascending(mat: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    assert_eq!(mat.nrows(), mat.ncols(), "eigh needs a square matrix");
    let se = mat.clone().symmetric_eigen();
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| se.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &se.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Flips each column so its first component with magnitude above `tol`
/// is positive. Makes eigenvector output deterministic across solvers.
pub fn fix_column_signs(mat: &mut DMatrix<f64>, tol: f64) {
    for c in 0..mat.ncols() {
        let lead = (0..mat.nrows()).find(|&r| mat[(r, c)].abs() > tol);
        if let Some(r) = lead {
            if mat[(r, c)] < 0.0 {
                for r2 in 0..mat.nrows() {
                    mat[(r2, c)] = -mat[(r2, c)];
                }
            }
        }
    }
}

/// Largest eigenpair residual ‖Av − λv‖ over all columns, used by tests to
/// enforce the solver tolerance contract.
pub fn eigen_residual(mat: &DMatrix<f64>, vals: &DVector<f64>, vecs: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for c in 0..vecs.ncols() {
        let v = vecs.column(c);
        let r = mat * v - vals[c] * v;
        worst = worst.max(r.norm());
    }
    worst
}
