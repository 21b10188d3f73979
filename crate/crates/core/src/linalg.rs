//! Small fixed-size matrix helpers shared by the models and filters.

use nalgebra::{DMatrix, SMatrix, SVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

pub type Vector2 = nalgebra::Vector2<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;
pub type Vector5 = SVector<f64, 5>;
pub type Matrix2 = nalgebra::Matrix2<f64>;
pub type Matrix3 = nalgebra::Matrix3<f64>;
pub type Matrix5 = SMatrix<f64, 5, 5>;
pub type Matrix5x2 = SMatrix<f64, 5, 2>;
pub type Matrix5x3 = SMatrix<f64, 5, 3>;
pub type Matrix2x3 = SMatrix<f64, 2, 3>;
pub type Matrix2x5 = SMatrix<f64, 2, 5>;

/// Eigenvalues below `-PSD_TOLERANCE` (relative to the largest magnitude)
/// mean the matrix is not PSD; anything above is clamped to zero.
pub const PSD_TOLERANCE: f64 = 1e-12;

pub fn symmetrize<const N: usize>(m: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    (m + m.transpose()) * 0.5
}

pub fn asymmetry<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    (m - m.transpose()).abs().max()
}

/// A square-root factor `L` with `L * L^T = m` for a symmetric PSD matrix.
///
/// Tries Cholesky first. Singular PSD inputs (zero rows, rank deficiency)
/// fall back to an eigendecomposition with tiny negative eigenvalues
/// clamped at zero.
pub fn psd_factor<const N: usize>(
    m: &SMatrix<f64, N, N>,
    what: &'static str,
) -> Result<SMatrix<f64, N, N>> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::NotPositiveSemidefinite(what));
    }
    let scale = m.abs().max().max(1.0);
    if asymmetry(m) > 1e-9 * scale {
        return Err(Error::NotPositiveSemidefinite(what));
    }
    if let Some(chol) = m.cholesky() {
        return Ok(chol.l());
    }
    let dynamic = DMatrix::from_iterator(N, N, m.iter().copied());
    let eigen = dynamic.symmetric_eigen();
    let floor = -PSD_TOLERANCE * scale;
    if eigen.eigenvalues.iter().any(|&l| l < floor) {
        return Err(Error::NotPositiveSemidefinite(what));
    }
    let sqrt_diag = DMatrix::from_diagonal(&eigen.eigenvalues.map(|l| l.max(0.0).sqrt()));
    let factor = &eigen.eigenvectors * sqrt_diag;
    Ok(SMatrix::from_iterator(factor.iter().copied()))
}

pub fn is_positive_definite<const N: usize>(m: &SMatrix<f64, N, N>) -> bool {
    m.iter().all(|v| v.is_finite())
        && asymmetry(m) <= 1e-9 * m.abs().max().max(1.0)
        && m.cholesky().is_some()
}

pub fn min_eigenvalue<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    let dynamic = DMatrix::from_iterator(N, N, symmetrize(m).iter().copied());
    dynamic.symmetric_eigenvalues().min()
}

pub fn standard_normal<const N: usize, R: Rng + ?Sized>(rng: &mut R) -> SVector<f64, N> {
    SVector::from_fn(|_, _| rng.sample(StandardNormal))
}

/// Zero-mean Gaussian draw `L * z` for a precomputed factor `L`.
pub fn gaussian<const N: usize, R: Rng + ?Sized>(
    factor: &SMatrix<f64, N, N>,
    rng: &mut R,
) -> SVector<f64, N> {
    factor * standard_normal::<N, R>(rng)
}

pub fn diag2(a: f64, b: f64) -> Matrix2 {
    Matrix2::new(a, 0.0, 0.0, b)
}
