use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eigen::{hermitian_eigen, psd_floor};
use super::matrix::CMatrix;
use crate::error::{PcsftError, Result};
use crate::tolerances::{Tolerances, HERM_TOL};

pub(crate) fn check_hermitian(m: &CMatrix, herm_tol: f64) -> Result<()> {
    if !m.is_finite() {
        return Err(PcsftError::NonFinite("operator"));
    }
    let tolerance = herm_tol * m.max_abs().max(1.0);
    let deviation = m.hermitian_deviation();
    if deviation > tolerance {
        return Err(PcsftError::NonHermitian { deviation, tolerance });
    }
    Ok(())
}

pub(crate) fn check_psd(m: &CMatrix, psd_tol: f64) -> Result<()> {
    let eig = hermitian_eigen(m)?;
    let floor = psd_floor(m.trace().re, psd_tol);
    if eig.min_eigenvalue() < floor {
        return Err(PcsftError::NotPositiveSemidefinite {
            min_eigenvalue: eig.min_eigenvalue(),
            tolerance: -floor,
        });
    }
    Ok(())
}

/// An observable: a Hermitian matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CMatrix", into = "CMatrix")]
pub struct HermitianOperator(CMatrix);

impl HermitianOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, HERM_TOL)
    }

    pub fn with_tolerance(m: CMatrix, herm_tol: f64) -> Result<Self> {
        check_hermitian(&m, herm_tol)?;
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim))
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        Self(CMatrix::from_real_diag(diag))
    }

    /// Divides by a positive real; stays Hermitian exactly.
    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        Self(m)
    }
}

impl TryFrom<CMatrix> for HermitianOperator {
    type Error = PcsftError;

    fn try_from(m: CMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<HermitianOperator> for CMatrix {
    fn from(h: HermitianOperator) -> Self {
        h.0
    }
}

/// A quantum state: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CMatrix", into = "CMatrix")]
pub struct DensityOperator(CMatrix);

impl DensityOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerances(m, &Tolerances::default())
    }

    pub fn with_tolerances(m: CMatrix, tol: &Tolerances) -> Result<Self> {
        check_hermitian(&m, tol.herm_tol)?;
        check_psd(&m, tol.psd_tol)?;
        let trace = m.trace().re;
        if (trace - 1.0).abs() > tol.trace_tol {
            return Err(PcsftError::TraceNotUnit {
                trace,
                tolerance: tol.trace_tol,
            });
        }
        Ok(Self(m))
    }

    /// `|ψ><ψ| / ||ψ||²`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let outer = CMatrix::outer(psi, psi)?;
        let norm = outer.trace().re;
        if norm <= 0.0 {
            return Err(PcsftError::DegenerateEnsemble);
        }
        Self::new(outer.scale(1.0 / norm))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(CMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn as_hermitian(&self) -> HermitianOperator {
        HermitianOperator(self.0.clone())
    }
}

impl TryFrom<CMatrix> for DensityOperator {
    type Error = PcsftError;

    fn try_from(m: CMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<DensityOperator> for CMatrix {
    fn from(d: DensityOperator) -> Self {
        d.0
    }
}

/// A physical variable of the field theory: `f(φ) = <φ|A|φ>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticForm {
    pub generator: HermitianOperator,
}

impl QuadraticForm {
    pub fn new(generator: HermitianOperator) -> Self {
        Self { generator }
    }

    /// The field energy `||φ||²`.
    pub fn energy(dim: usize) -> Self {
        Self::new(HermitianOperator::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.generator.dim()
    }
}

/// Result of [`hermitize`]. `deviation` is set when the input was further
/// than `HERM_TOL` (relative) from Hermitian.
#[derive(Debug, Clone)]
pub struct Hermitized {
    pub operator: HermitianOperator,
    pub deviation: Option<f64>,
}

/// `(M + M†) / 2`.
pub fn hermitize(m: &CMatrix) -> Hermitized {
    let n = m.dim();
    let mut out = CMatrix::zeros(n);
    for j in 0..n {
        for k in 0..n {
            out[(j, k)] = (m[(j, k)] + m[(k, j)].conj()) * 0.5;
        }
    }
    let dev = m.hermitian_deviation();
    let deviation = (dev > HERM_TOL * m.max_abs().max(1.0)).then_some(dev);
    Hermitized {
        operator: HermitianOperator(out),
        deviation,
    }
}
