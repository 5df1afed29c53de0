//! Zero-mean, finite-energy probability distributions on the state space:
//! construction, seeded sampling, exact and empirical covariance operators.
//!
//! The covariance of an ensemble is `B = E[|ξ><ξ|]`, i.e. `B_jk = E[ξ_j conj(ξ_k)]`,
//! so that `<a|B|b> = E[<a|ξ><ξ|b>]`.

mod batch;

pub use batch::{Provenance, SampleBatch, BATCH_HEADER_LEN, BATCH_MAGIC, BATCH_VERSION};
pub(crate) use batch::Reader;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PcsftError, Result};
use crate::hilbert::{check_hermitian, check_psd, energy_slice, psd_sqrt, CMatrix, FieldState, HermitianOperator};
use crate::random::complex_normal;
use crate::stream::{block_rng, blocks, RNG_ID};
use crate::sum::{pairwise_sum, pairwise_sum_by};
use crate::tolerances::{Tolerances, PSD_TOL};

/// Allowed `|Σ w - 1|` for mixture weights.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Hermitian positive semidefinite covariance of a field ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CMatrix", into = "CMatrix")]
pub struct CovarianceOperator(CMatrix);

impl CovarianceOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerances(m, &Tolerances::default())
    }

    pub fn with_tolerances(m: CMatrix, tol: &Tolerances) -> Result<Self> {
        check_hermitian(&m, tol.herm_tol)?;
        check_psd(&m, tol.psd_tol)?;
        Ok(Self(m))
    }

    /// For matrices that are Hermitian PSD by construction (sums of `|ψ><ψ|`).
    pub(crate) fn from_gram(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn as_hermitian(&self) -> HermitianOperator {
        HermitianOperator::from_matrix_unchecked(self.0.clone())
    }
}

impl TryFrom<CMatrix> for CovarianceOperator {
    type Error = PcsftError;

    fn try_from(m: CMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<CovarianceOperator> for CMatrix {
    fn from(c: CovarianceOperator) -> Self {
        c.0
    }
}

/// One `(weight, ψ)` entry of a finite mixture. The ensemble places weight
/// `w/2` on each of `ψ` and `-ψ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub state: FieldState,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleKind {
    /// Circularly symmetric complex Gaussian with the given covariance.
    Gaussian { covariance: CovarianceOperator },
    /// `±ψ` with probability ½ each.
    TwoPoint { psi: FieldState },
    /// Symmetrized finite mixture.
    FiniteMixture { components: Vec<MixtureComponent> },
}

/// A probability distribution on the state space with zero mean and finite
/// second moment, plus the default seed used by [`FieldEnsemble::sample_default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnsembleSpec", into = "EnsembleSpec")]
pub struct FieldEnsemble {
    dim: usize,
    kind: EnsembleKind,
    seed: u64,
}

impl FieldEnsemble {
    pub fn gaussian(covariance: CMatrix) -> Result<Self> {
        Self::gaussian_from(CovarianceOperator::new(covariance)?)
    }

    pub fn gaussian_from(covariance: CovarianceOperator) -> Result<Self> {
        let dim = covariance.dim();
        if dim == 0 {
            return Err(PcsftError::InvalidEnsemble("dimension 0".into()));
        }
        Ok(Self {
            dim,
            kind: EnsembleKind::Gaussian { covariance },
            seed: 0,
        })
    }

    pub fn two_point(psi: FieldState) -> Self {
        Self {
            dim: psi.dim(),
            kind: EnsembleKind::TwoPoint { psi },
            seed: 0,
        }
    }

    pub fn finite_mixture(components: Vec<MixtureComponent>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| PcsftError::InvalidEnsemble("mixture has no components".into()))?;
        let dim = first.state.dim();
        for c in &components {
            if c.state.dim() != dim {
                return Err(PcsftError::Dimension {
                    expected: dim,
                    found: c.state.dim(),
                });
            }
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(PcsftError::InvalidEnsemble(format!("weight {} is not a probability", c.weight)));
            }
        }
        let total = pairwise_sum_by(components.len(), |i| components[i].weight);
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(PcsftError::InvalidEnsemble(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            dim,
            kind: EnsembleKind::FiniteMixture { components },
            seed: 0,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &EnsembleKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            EnsembleKind::Gaussian { .. } => "gaussian",
            EnsembleKind::TwoPoint { .. } => "two_point",
            EnsembleKind::FiniteMixture { .. } => "finite_mixture",
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Draws `n` samples with the ensemble's own seed.
    pub fn sample_default(&self, n: usize) -> Result<SampleBatch> {
        sample(self, n, self.seed)
    }

    /// Analytic `E ||ξ||⁴`. For the Gaussian kind this is `(Tr B)² + Tr B²`.
    pub fn fourth_moment(&self) -> f64 {
        match &self.kind {
            EnsembleKind::Gaussian { covariance } => {
                let b = covariance.matrix();
                let tr = b.trace().re;
                tr * tr + b.trace_product(b).expect("square").re
            }
            EnsembleKind::TwoPoint { psi } => {
                let e = energy_slice(psi.amplitudes());
                e * e
            }
            EnsembleKind::FiniteMixture { components } => pairwise_sum_by(components.len(), |i| {
                let e = energy_slice(components[i].state.amplitudes());
                components[i].weight * e * e
            }),
        }
    }
}

/// `B_p`. Exact for every kind: the stored covariance, `|ψ><ψ|`, or `Σ w_i |ψ_i><ψ_i|`.
pub fn exact_covariance(p: &FieldEnsemble) -> CovarianceOperator {
    match &p.kind {
        EnsembleKind::Gaussian { covariance } => covariance.clone(),
        EnsembleKind::TwoPoint { psi } => {
            CovarianceOperator::from_gram(CMatrix::outer(psi.amplitudes(), psi.amplitudes()).expect("same dim"))
        }
        EnsembleKind::FiniteMixture { components } => {
            let n = p.dim;
            let mut data = Vec::with_capacity(n * n);
            for j in 0..n {
                for k in 0..n {
                    data.push(pairwise_sum_by(components.len(), |i| {
                        let a = components[i].state.amplitudes();
                        a[j] * a[k].conj() * components[i].weight
                    }));
                }
            }
            CovarianceOperator::from_gram(CMatrix::from_vec(n, data).expect("square"))
        }
    }
}

/// `E_p = ∫ ||φ||² dp(φ)`, computed from the distribution itself rather than
/// from the covariance matrix.
pub fn energy_average(p: &FieldEnsemble) -> f64 {
    match &p.kind {
        EnsembleKind::Gaussian { covariance } => {
            let b = covariance.matrix();
            pairwise_sum_by(p.dim, |j| b[(j, j)].re)
        }
        EnsembleKind::TwoPoint { psi } => energy_slice(psi.amplitudes()),
        EnsembleKind::FiniteMixture { components } => pairwise_sum_by(components.len(), |i| {
            components[i].weight * energy_slice(components[i].state.amplitudes())
        }),
    }
}

/// Precomputed draw rule for one ensemble.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    ensemble: &'a FieldEnsemble,
    rule: Rule,
}

#[derive(Debug, Clone)]
enum Rule {
    Gaussian { sqrt: CMatrix },
    TwoPoint,
    Mixture { cumulative: Vec<f64> },
}

impl<'a> Sampler<'a> {
    pub fn new(ensemble: &'a FieldEnsemble) -> Result<Self> {
        Self::with_psd_tolerance(ensemble, PSD_TOL)
    }

    pub fn with_psd_tolerance(ensemble: &'a FieldEnsemble, psd_tol: f64) -> Result<Self> {
        let rule = match &ensemble.kind {
            EnsembleKind::Gaussian { covariance } => Rule::Gaussian {
                sqrt: psd_sqrt(covariance.matrix(), psd_tol)?,
            },
            EnsembleKind::TwoPoint { .. } => Rule::TwoPoint,
            EnsembleKind::FiniteMixture { components } => {
                let mut acc = 0.0;
                let cumulative = components
                    .iter()
                    .map(|c| {
                        acc += c.weight;
                        acc
                    })
                    .collect();
                Rule::Mixture { cumulative }
            }
        };
        Ok(Self { ensemble, rule })
    }

    pub fn dim(&self) -> usize {
        self.ensemble.dim
    }

    /// Writes one sample into `out` (length `dim`).
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [Complex64]) {
        match (&self.rule, &self.ensemble.kind) {
            (Rule::Gaussian { sqrt }, _) => {
                let zeta: Vec<Complex64> = (0..out.len()).map(|_| complex_normal(rng)).collect();
                for (j, o) in out.iter_mut().enumerate() {
                    let row = sqrt.row(j);
                    *o = pairwise_sum_by(zeta.len(), |k| row[k] * zeta[k]);
                }
            }
            (Rule::TwoPoint, EnsembleKind::TwoPoint { psi }) => {
                signed_copy(psi.amplitudes(), rng.random::<bool>(), out);
            }
            (Rule::Mixture { cumulative }, EnsembleKind::FiniteMixture { components }) => {
                let u: f64 = rng.random::<f64>() * cumulative.last().copied().unwrap_or(1.0);
                let idx = cumulative.partition_point(|&c| c <= u).min(components.len() - 1);
                signed_copy(components[idx].state.amplitudes(), rng.random::<bool>(), out);
            }
            _ => unreachable!("rule built from the same ensemble"),
        }
    }

    /// Runs `visit` over samples `start..start+len` of the stream for `seed`,
    /// where `start` is block-aligned.
    pub(crate) fn for_each_in_block(&self, seed: u64, block: u64, len: usize, mut visit: impl FnMut(&[Complex64])) {
        let mut rng = block_rng(seed, block);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.dim()];
        for _ in 0..len {
            self.draw(&mut rng, &mut buf);
            visit(&buf);
        }
    }
}

fn signed_copy(src: &[Complex64], negate: bool, out: &mut [Complex64]) {
    for (o, s) in out.iter_mut().zip(src) {
        *o = if negate { -s } else { *s };
    }
}

/// Draws `n` samples. Bit-identical for identical `(p, n, seed)` regardless
/// of the size of the rayon pool it runs on.
pub fn sample(p: &FieldEnsemble, n: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(PcsftError::EmptyBatch);
    }
    let sampler = Sampler::new(p)?;
    let chunks: Vec<Vec<Complex64>> = blocks(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(b, _, len)| {
            let mut out = Vec::with_capacity(len * p.dim);
            sampler.for_each_in_block(seed, b, len, |s| out.extend_from_slice(s));
            out
        })
        .collect();
    let data = chunks.concat();
    SampleBatch::from_flat(
        p.dim,
        data,
        Some(Provenance {
            rng: RNG_ID.to_string(),
            seed,
        }),
    )
}

pub fn empirical_mean(batch: &SampleBatch) -> FieldState {
    let n = batch.len();
    let mean = (0..batch.dim())
        .map(|j| pairwise_sum_by(n, |i| batch.sample(i)[j]) / n as f64)
        .collect();
    FieldState::from_vec_unchecked(mean)
}

/// `(1/N) Σ |ξ_n><ξ_n|`; no mean subtraction.
pub fn empirical_covariance(batch: &SampleBatch) -> CovarianceOperator {
    let (n, dim) = (batch.len(), batch.dim());
    let mut data = Vec::with_capacity(dim * dim);
    for j in 0..dim {
        for k in 0..dim {
            data.push(pairwise_sum_by(n, |i| {
                let s = batch.sample(i);
                s[j] * s[k].conj()
            }) / n as f64);
        }
    }
    CovarianceOperator::from_gram(CMatrix::from_vec(dim, data).expect("square"))
}

/// Empirical `E ||ξ||⁴` and its standard error.
pub fn empirical_fourth_moment(batch: &SampleBatch) -> (f64, f64) {
    let values: Vec<f64> = batch.iter().map(|s| energy_slice(s).powi(2)).collect();
    let n = values.len() as f64;
    let mean = pairwise_sum(&values) / n;
    let var = if values.len() > 1 {
        pairwise_sum_by(values.len(), |i| (values[i] - mean).powi(2)) / (n - 1.0)
    } else {
        0.0
    };
    (mean, (var / n).sqrt())
}

/// JSON shape of an ensemble: `{"kind", "dim", "seed", ...}` with one of
/// `covariance`, `psi` or `components` depending on the kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub kind: KindTag,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<CMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<FieldState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<MixtureComponent>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindTag {
    Gaussian,
    TwoPoint,
    FiniteMixture,
}

impl TryFrom<EnsembleSpec> for FieldEnsemble {
    type Error = PcsftError;

    fn try_from(spec: EnsembleSpec) -> Result<Self> {
        Self::from_spec(spec, &Tolerances::default())
    }
}

impl FieldEnsemble {
    /// Validates a JSON ensemble description under the given tolerances.
    pub fn from_spec(spec: EnsembleSpec, tol: &Tolerances) -> Result<Self> {
        let extra = |field: &str| PcsftError::InvalidEnsemble(format!("field `{field}` not allowed for this kind"));
        let missing = |field: &str| PcsftError::InvalidEnsemble(format!("missing field `{field}`"));
        let ensemble = match spec.kind {
            KindTag::Gaussian => {
                if spec.psi.is_some() {
                    return Err(extra("psi"));
                }
                if spec.components.is_some() {
                    return Err(extra("components"));
                }
                let cov = spec.covariance.ok_or_else(|| missing("covariance"))?;
                Self::gaussian_from(CovarianceOperator::with_tolerances(cov, tol)?)?
            }
            KindTag::TwoPoint => {
                if spec.covariance.is_some() {
                    return Err(extra("covariance"));
                }
                if spec.components.is_some() {
                    return Err(extra("components"));
                }
                Self::two_point(spec.psi.ok_or_else(|| missing("psi"))?)
            }
            KindTag::FiniteMixture => {
                if spec.covariance.is_some() {
                    return Err(extra("covariance"));
                }
                if spec.psi.is_some() {
                    return Err(extra("psi"));
                }
                Self::finite_mixture(spec.components.ok_or_else(|| missing("components"))?)?
            }
        };
        if ensemble.dim != spec.dim {
            return Err(PcsftError::Dimension {
                expected: spec.dim,
                found: ensemble.dim,
            });
        }
        Ok(ensemble.with_seed(spec.seed.unwrap_or(0)))
    }
}

impl From<FieldEnsemble> for EnsembleSpec {
    fn from(p: FieldEnsemble) -> Self {
        let mut spec = EnsembleSpec {
            kind: KindTag::Gaussian,
            dim: p.dim,
            seed: Some(p.seed),
            covariance: None,
            psi: None,
            components: None,
        };
        match p.kind {
            EnsembleKind::Gaussian { covariance } => spec.covariance = Some(covariance.into()),
            EnsembleKind::TwoPoint { psi } => {
                spec.kind = KindTag::TwoPoint;
                spec.psi = Some(psi);
            }
            EnsembleKind::FiniteMixture { components } => {
                spec.kind = KindTag::FiniteMixture;
                spec.components = Some(components);
            }
        }
        spec
    }
}
