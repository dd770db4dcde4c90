//! Dense linear-algebra kernels used by the fluid-queue solver.

mod expm;
mod schur;

pub use expm::{expm, ExpStepper};
pub use schur::{ordered_real_schur, OrderedSchur};

use nalgebra::{Complex, DMatrix, DVector, RowDVector};

pub fn ones(n: usize) -> DVector<f64> {
    DVector::from_element(n, 1.0)
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Column vector as an `n×1` matrix, for use inside Kronecker products.
pub fn col(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

/// Row vector as a `1×n` matrix, for use inside Kronecker products.
pub fn row(v: &RowDVector<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(1, v.len(), v.as_slice())
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Eigenvalues of a general real matrix, from its real Schur form.
pub fn eigenvalues(m: &DMatrix<f64>) -> Option<Vec<Complex<f64>>> {
    if m.nrows() == 0 {
        return Some(Vec::new());
    }
    let n = m.nrows();
    nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 200 * n.max(10))
        .map(|s| s.complex_eigenvalues().iter().copied().collect())
}

/// Eigenvalue with the largest real part.
pub fn rightmost_eigenvalue(m: &DMatrix<f64>) -> Option<Complex<f64>> {
    eigenvalues(m)?
        .into_iter()
        .max_by(|a, b| a.re.total_cmp(&b.re))
}
