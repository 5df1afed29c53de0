//! Finite-dimensional complex Hilbert space: field states, inner products,
//! Hermitian and density operators, quadratic forms.
//!
//! Inner products are antilinear in the first slot: `<a|b> = Σ conj(a_j) b_j`.

mod eigen;
mod matrix;
mod operator;

pub use eigen::{hermitian_eigen, psd_floor, psd_sqrt, HermitianEigen};
pub use matrix::CMatrix;
pub use operator::{hermitize, DensityOperator, HermitianOperator, Hermitized, QuadraticForm};

pub(crate) use operator::{check_hermitian, check_psd};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PcsftError, Result};
use crate::sum::pairwise_sum_by;
use crate::tolerances::FORM_TOL;

/// A vector of the state space, in general not normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct FieldState {
    amplitudes: Vec<Complex64>,
}

impl FieldState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(PcsftError::InvalidArgument("field state has dimension 0".into()));
        }
        if !amplitudes.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(PcsftError::NonFinite("field state"));
        }
        Ok(Self { amplitudes })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            amplitudes: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    /// Standard basis vector `e_j`.
    pub fn basis(dim: usize, j: usize) -> Self {
        let mut s = Self::zeros(dim);
        s.amplitudes[j] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|z| z * s).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|z| -z).collect(),
        }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: Complex64, other: &Self) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(Self {
            amplitudes: self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(a, b)| a + s * b)
                .collect(),
        })
    }

    pub(crate) fn from_vec_unchecked(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }
}

impl TryFrom<Vec<[f64; 2]>> for FieldState {
    type Error = PcsftError;

    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

impl From<FieldState> for Vec<[f64; 2]> {
    fn from(s: FieldState) -> Self {
        s.amplitudes.into_iter().map(|z| [z.re, z.im]).collect()
    }
}

fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(PcsftError::Dimension { expected, found });
    }
    Ok(())
}

pub(crate) fn inner_slices(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    pairwise_sum_by(a.len(), |j| a[j].conj() * b[j])
}

pub fn inner_product(a: &FieldState, b: &FieldState) -> Result<Complex64> {
    same_dim(a.dim(), b.dim())?;
    Ok(inner_slices(&a.amplitudes, &b.amplitudes))
}

/// `f(φ) = <φ|A_f|φ>`, checked to be real within `FORM_TOL`.
pub fn quadratic_form(f: &QuadraticForm, phi: &FieldState) -> Result<f64> {
    quadratic_form_with_tolerance(f, phi, FORM_TOL)
}

pub fn quadratic_form_with_tolerance(f: &QuadraticForm, phi: &FieldState, form_tol: f64) -> Result<f64> {
    same_dim(f.dim(), phi.dim())?;
    form_value(f.generator.matrix(), &phi.amplitudes, form_tol)
}

pub(crate) fn form_value(a: &CMatrix, phi: &[Complex64], form_tol: f64) -> Result<f64> {
    let a_phi = a.matvec(phi)?;
    let z = inner_slices(phi, &a_phi);
    let tolerance = form_tol * (1.0 + z.re.abs());
    if z.im.abs() > tolerance {
        return Err(PcsftError::NonHermitian {
            deviation: z.im.abs(),
            tolerance,
        });
    }
    Ok(z.re)
}

/// `||φ||²`. Summed in the same order as [`quadratic_form`] with `A = I`.
pub fn field_energy(phi: &FieldState) -> f64 {
    energy_slice(&phi.amplitudes)
}

pub(crate) fn energy_slice(a: &[Complex64]) -> f64 {
    pairwise_sum_by(a.len(), |j| a[j].norm_sqr())
}

/// `Tr(B A)`, real for Hermitian arguments.
pub fn trace_pairing(b: &HermitianOperator, a: &HermitianOperator) -> Result<f64> {
    same_dim(b.dim(), a.dim())?;
    let z = b.matrix().trace_product(a.matrix())?;
    debug_assert!(z.im.abs() <= 1e-8 * (1.0 + z.re.abs()) * b.matrix().max_abs().max(1.0) * a.matrix().max_abs().max(1.0));
    Ok(z.re)
}
