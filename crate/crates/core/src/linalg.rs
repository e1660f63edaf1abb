//! Small dense complex linear algebra used by the scattering models.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Condition numbers above this are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

pub const J: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Builds a complex matrix from real row-major entries.
pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| re(rows[i][j]))
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1(a: &CMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest entry-wise absolute difference.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Inverts `a` by LU with partial pivoting and returns the inverse together
/// with its 1-norm condition number. Fails when the condition number exceeds
/// [`MAX_CONDITION`].
pub fn inverse_checked(a: &CMatrix, context: &'static str) -> Result<(CMatrix, f64)> {
    let inv = a.clone().lu().try_inverse().ok_or(Error::Singular {
        context,
        condition: f64::INFINITY,
    })?;
    let condition = norm1(a) * norm1(&inv);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::Singular { context, condition });
    }
    Ok((inv, condition))
}

/// Solves `a x = b`, reporting the condition number of `a`.
pub fn solve_checked(a: &CMatrix, b: &CMatrix, context: &'static str) -> Result<(CMatrix, f64)> {
    let (inv, condition) = inverse_checked(a, context)?;
    Ok((inv * b, condition))
}

/// `(1 + m)^-1 (1 - m)`.
pub fn cayley(m: &CMatrix, context: &'static str) -> Result<(CMatrix, f64)> {
    let n = m.nrows();
    let id = identity(n);
    solve_checked(&(&id + m), &(&id - m), context)
}

/// Largest entry of `|S^† S - 1|`; zero for a unitary matrix.
pub fn unitarity_error(s: &CMatrix) -> f64 {
    let n = s.ncols();
    max_abs_diff(&(s.adjoint() * s), &identity(n))
}

/// Embeds two square blocks on the diagonal of a larger matrix.
pub fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = CMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}
