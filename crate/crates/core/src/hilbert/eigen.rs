//! Hermitian eigendecomposition and the PSD square root built on it.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::matrix::CMatrix;
use crate::error::{PcsftError, Result};

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector for `eigenvalues[k]`.
    pub eigenvectors: CMatrix,
}

impl HermitianEigen {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        let n = self.eigenvectors.dim();
        (0..n).map(|j| self.eigenvectors[(j, k)]).collect()
    }

    /// `V f(Λ) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.eigenvectors.dim();
        let v = &self.eigenvectors;
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = CMatrix::zeros(n);
        for j in 0..n {
            for k in 0..n {
                out[(j, k)] = crate::sum::pairwise_sum_by(n, |l| v[(j, l)] * weights[l] * v[(k, l)].conj());
            }
        }
        out
    }
}

/// Eigendecomposition of the Hermitian part of `m`.
///
/// Only the contract is fixed here (ascending real eigenvalues, unitary
/// eigenvectors); the QR iteration is nalgebra's.
pub fn hermitian_eigen(m: &CMatrix) -> Result<HermitianEigen> {
    if !m.is_finite() {
        return Err(PcsftError::NonFinite("matrix"));
    }
    let n = m.dim();
    if n == 0 {
        return Ok(HermitianEigen {
            eigenvalues: Vec::new(),
            eigenvectors: CMatrix::zeros(0),
        });
    }
    // nalgebra reads the lower triangle only; feed it the exact Hermitian part.
    let sym = DMatrix::from_fn(n, n, |j, k| (m[(j, k)] + m[(k, j)].conj()) * 0.5);
    let eig = sym
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or_else(|| PcsftError::InvalidArgument("eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for j in 0..n {
            vectors[(j, col)] = eig.eigenvectors[(j, src)];
        }
    }
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors: vectors,
    })
}

/// PSD threshold used throughout: `-psd_tol * max(1, Tr m)`.
pub fn psd_floor(trace: f64, psd_tol: f64) -> f64 {
    -psd_tol * trace.max(1.0)
}

/// Hermitian square root of a PSD matrix. Eigenvalues in `[floor, 0)` are
/// clamped to zero; anything below the floor is an error. Positive eigenvalues
/// at round-off level (`dim · ε · λ_max`) are zeroed too, otherwise their
/// square roots leak `~1e-8` noise into the null space of rank-deficient input.
pub fn psd_sqrt(m: &CMatrix, psd_tol: f64) -> Result<CMatrix> {
    let eig = hermitian_eigen(m)?;
    let floor = psd_floor(m.trace().re, psd_tol);
    if eig.min_eigenvalue() < floor {
        return Err(PcsftError::NotPositiveSemidefinite {
            min_eigenvalue: eig.min_eigenvalue(),
            tolerance: -floor,
        });
    }
    let noise = m.dim() as f64 * f64::EPSILON * eig.max_eigenvalue().max(0.0);
    Ok(eig.reconstruct_with(|l| if l <= noise { 0.0 } else { l.sqrt() }))
}
