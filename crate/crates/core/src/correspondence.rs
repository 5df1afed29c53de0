//! Maps from the field picture to the quantum picture.
//!
//! An ensemble `p` maps to the density operator `ρ_p = B_p / E_p`; a quadratic
//! form `f` maps to its generator `A_f`. The first map forgets everything about
//! `p` except its normalized covariance (many-to-one, onto); the second is
//! injective. Averages correspond through `<f>_p / E_p = Tr ρ_p A_f`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{energy_average, exact_covariance, FieldEnsemble};
use crate::error::{PcsftError, Result};
use crate::hilbert::{
    hermitian_eigen, hermitize, trace_pairing, CMatrix, DensityOperator, FieldState, HermitianOperator, QuadraticForm,
};
use crate::tolerances::Tolerances;

/// `ρ_p = B_p / E_p`, validated as a density operator.
pub fn ensemble_to_density(p: &FieldEnsemble) -> Result<DensityOperator> {
    ensemble_to_density_with(p, &Tolerances::default())
}

pub fn ensemble_to_density_with(p: &FieldEnsemble, tol: &Tolerances) -> Result<DensityOperator> {
    let energy = nondegenerate_energy(p)?;
    let b = exact_covariance(p);
    DensityOperator::with_tolerances(b.matrix().scale(1.0 / energy), tol)
}

/// `A_f`.
pub fn form_to_observable(f: &QuadraticForm) -> HermitianOperator {
    f.generator.clone()
}

fn nondegenerate_energy(p: &FieldEnsemble) -> Result<f64> {
    let energy = energy_average(p);
    if !(energy > 0.0) {
        return Err(PcsftError::DegenerateEnsemble);
    }
    Ok(energy)
}

/// Recovers the Hermitian generator of a black-box quadratic form.
///
/// Diagonal entries are `q(e_j)`. Off-diagonal entries use the complex
/// polarization identity for a form antilinear in its first slot:
///
/// `A_jk = ¼ [q(e_j + e_k) - q(e_j - e_k) - i q(e_j + i e_k) + i q(e_j - i e_k)]`
///
/// Both `A_jk` and `A_kj` are polarized independently, and the result is then
/// probed at extra vectors; any inconsistency means `eval` is not a
/// quadratic form.
pub fn reconstruct_generator<F>(eval: F, dim: usize) -> Result<HermitianOperator>
where
    F: Fn(&FieldState) -> f64,
{
    reconstruct_generator_with(eval, dim, &Tolerances::default())
}

pub fn reconstruct_generator_with<F>(eval: F, dim: usize, tol: &Tolerances) -> Result<HermitianOperator>
where
    F: Fn(&FieldState) -> f64,
{
    if dim == 0 {
        return Err(PcsftError::InvalidArgument("dimension 0".into()));
    }
    let q = |v: Vec<Complex64>| -> Result<f64> {
        let value = eval(&FieldState::new(v)?);
        if !value.is_finite() {
            return Err(PcsftError::NotAQuadraticForm { residual: f64::INFINITY });
        }
        Ok(value)
    };
    let probe = |j: usize, k: usize, coef: Complex64| {
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        v[j] += Complex64::new(1.0, 0.0);
        v[k] += coef;
        v
    };
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);

    let mut a = CMatrix::zeros(dim);
    for j in 0..dim {
        a[(j, j)] = Complex64::new(q(FieldState::basis(dim, j).into_amplitudes())?, 0.0);
        for k in 0..dim {
            if k == j {
                continue;
            }
            let plus = q(probe(j, k, one))?;
            let minus = q(probe(j, k, -one))?;
            let plus_i = q(probe(j, k, i))?;
            let minus_i = q(probe(j, k, -i))?;
            a[(j, k)] = (Complex64::new(plus - minus, 0.0) - i * plus_i + i * minus_i) * 0.25;
        }
    }

    let scale = a.max_abs().max(1.0);
    let deviation = a.hermitian_deviation();
    if deviation > tol.herm_tol * scale {
        return Err(PcsftError::NotAQuadraticForm { residual: deviation });
    }
    let generator = hermitize(&a).operator;
    let form = QuadraticForm::new(generator.clone());

    for v in consistency_probes(dim) {
        let expected = crate::hilbert::quadratic_form_with_tolerance(&form, &v, tol.form_tol)?;
        let got = eval(&v);
        let residual = (got - expected).abs();
        if !(residual <= tol.form_tol * (1.0 + expected.abs()).max(scale)) {
            return Err(PcsftError::NotAQuadraticForm { residual });
        }
    }
    Ok(generator)
}

/// Vectors not used by the polarization step: scaled basis vectors (checks
/// degree-2 homogeneity) and two dense vectors with varying phases.
fn consistency_probes(dim: usize) -> Vec<FieldState> {
    let mut probes: Vec<FieldState> = (0..dim)
        .map(|j| FieldState::basis(dim, j).scaled(Complex64::new(2.0, 0.0)))
        .collect();
    probes.push(FieldState::from_vec_unchecked(vec![Complex64::new(1.0, 0.0); dim]));
    probes.push(FieldState::from_vec_unchecked(
        (0..dim)
            .map(|j| Complex64::from_polar(1.0 + j as f64 / dim as f64, 0.7 * j as f64 + 0.3))
            .collect(),
    ));
    probes
}

/// Closed form of `<f>_p = ∫ f dp = Tr B_p A_f`; depends only on second moments.
pub fn bild_average_exact(p: &FieldEnsemble, f: &QuadraticForm) -> Result<f64> {
    trace_pairing(&exact_covariance(p).as_hermitian(), &f.generator)
}

/// `Tr ρ A`.
pub fn qm_average(rho: &DensityOperator, a: &HermitianOperator) -> Result<f64> {
    trace_pairing(&rho.as_hermitian(), a)
}

/// Both sides of `<f>_p / E_p = Tr ρ_p A_f` and their residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledAverageReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub energy: f64,
    pub dims: usize,
    pub passed: bool,
}

pub fn verify_scaled_average(p: &FieldEnsemble, f: &QuadraticForm) -> Result<ScaledAverageReport> {
    verify_scaled_average_with(p, f, &Tolerances::default())
}

pub fn verify_scaled_average_with(p: &FieldEnsemble, f: &QuadraticForm, tol: &Tolerances) -> Result<ScaledAverageReport> {
    if p.dim() != f.dim() {
        return Err(PcsftError::Dimension {
            expected: p.dim(),
            found: f.dim(),
        });
    }
    let energy = nondegenerate_energy(p)?;
    let lhs = bild_average_exact(p, f)? / energy;
    let rhs = qm_average(&ensemble_to_density_with(p, tol)?, &form_to_observable(f))?;
    let residual = (lhs - rhs).abs();
    Ok(ScaledAverageReport {
        lhs,
        rhs,
        residual,
        energy,
        dims: p.dim(),
        passed: residual <= tol.identity_tol * (1.0 + rhs.abs()),
    })
}

/// `g_p = f / E_p`, whose field average equals the quantum average of `f`.
pub fn amplified_variable(f: &QuadraticForm, p: &FieldEnsemble) -> Result<QuadraticForm> {
    let energy = nondegenerate_energy(p)?;
    Ok(QuadraticForm::new(f.generator.scaled(1.0 / energy)))
}

/// Both descriptions of one experiment: an ensemble with a form, and the
/// density operator with the observable they map to.
#[derive(Debug, Clone)]
pub struct CorrespondencePair {
    pub ensemble: FieldEnsemble,
    pub form: QuadraticForm,
    pub density: DensityOperator,
    pub observable: HermitianOperator,
    pub energy: f64,
}

impl CorrespondencePair {
    pub fn new(ensemble: FieldEnsemble, form: QuadraticForm) -> Result<Self> {
        if ensemble.dim() != form.dim() {
            return Err(PcsftError::Dimension {
                expected: ensemble.dim(),
                found: form.dim(),
            });
        }
        let density = ensemble_to_density(&ensemble)?;
        let observable = form_to_observable(&form);
        let energy = energy_average(&ensemble);
        Ok(Self {
            ensemble,
            form,
            density,
            observable,
            energy,
        })
    }

    /// Frobenius distance from `claimed` to the density this pair maps to.
    pub fn density_distance(&self, claimed: &DensityOperator) -> Result<f64> {
        Ok(self.density.matrix().sub(claimed.matrix())?.frobenius_norm())
    }
}

/// Constructive preimage of `ρ`: the Gaussian ensemble with covariance `scale·ρ`.
pub fn audit_surjective(rho: &DensityOperator, scale: f64) -> Result<FieldEnsemble> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(PcsftError::InvalidScale(scale));
    }
    FieldEnsemble::gaussian(rho.matrix().scale(scale))
}

/// Two distinct ensembles with the same image under [`ensemble_to_density`].
#[derive(Debug, Clone)]
pub struct ManyToOneWitness {
    pub first: FieldEnsemble,
    pub second: FieldEnsemble,
    /// Frobenius distance between the two images.
    pub image_distance: f64,
    /// Frobenius distance from the first image to the input `ρ`.
    pub distance_to_rho: f64,
    pub energies: (f64, f64),
    pub fourth_moments: (f64, f64),
}

impl ManyToOneWitness {
    pub fn is_distinct(&self) -> bool {
        self.energies.0 != self.energies.1 || self.fourth_moments.0 != self.fourth_moments.1
    }
}

/// Relative gap below which a density operator counts as rank one.
pub const RANK_ONE_TOL: f64 = 1e-10;

/// For rank-one `ρ = |ψ><ψ|` the witness is a Gaussian with covariance
/// `|ψ><ψ|` against the two-point ensemble `±ψ`; otherwise `gaussian(ρ)`
/// against `gaussian(5ρ)`.
pub fn audit_many_to_one(rho: &DensityOperator) -> Result<ManyToOneWitness> {
    let eig = hermitian_eigen(rho.matrix())?;
    let top = eig.max_eigenvalue();
    let (first, second) = if (1.0 - top).abs() <= RANK_ONE_TOL {
        let psi = FieldState::new(
            eig.eigenvector(rho.dim() - 1)
                .into_iter()
                .map(|z| z * top.sqrt())
                .collect(),
        )?;
        let gaussian = FieldEnsemble::gaussian(CMatrix::outer(psi.amplitudes(), psi.amplitudes())?)?;
        (gaussian, FieldEnsemble::two_point(psi))
    } else {
        (audit_surjective(rho, 1.0)?, audit_surjective(rho, 5.0)?)
    };
    let image_a = ensemble_to_density(&first)?;
    let image_b = ensemble_to_density(&second)?;
    Ok(ManyToOneWitness {
        image_distance: image_a.matrix().sub(image_b.matrix())?.frobenius_norm(),
        distance_to_rho: image_a.matrix().sub(rho.matrix())?.frobenius_norm(),
        energies: (energy_average(&first), energy_average(&second)),
        fourth_moments: (first.fourth_moment(), second.fourth_moment()),
        first,
        second,
    })
}

#[cfg(test)]
mod tests;
