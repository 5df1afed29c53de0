//! Monte Carlo estimates of field averages `<f>_p` with standard errors, and
//! sweeps over sample size that certify the `1/√N` convergence rate.
//!
//! Samples are streamed block by block; each block keeps a Welford
//! `(count, mean, M2)` triple and the triples are merged along a fixed
//! balanced tree keyed by block index.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correspondence::bild_average_exact;
use crate::ensemble::{FieldEnsemble, Sampler};
use crate::error::{PcsftError, Result};
use crate::hilbert::{form_value, QuadraticForm};
use crate::stream::{blocks, derive_seed, RNG_ID};
use crate::tolerances::FORM_TOL;

/// Streaming count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Parallel-moments combination of two disjoint partitions.
    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let (na, nb) = (self.count as f64, other.count as f64);
        let delta = other.mean - self.mean;
        Self {
            count,
            mean: self.mean + delta * nb / count as f64,
            m2: self.m2 + other.m2 + delta * delta * na * nb / count as f64,
        }
    }

    /// Unbiased sample variance; 0 below two observations.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Merges partitions pairwise along a balanced tree over their index order.
pub fn merge_tree(parts: &[Moments]) -> Moments {
    match parts.len() {
        0 => Moments::default(),
        1 => parts[0],
        n => merge_tree(&parts[..n / 2]).merge(&merge_tree(&parts[n / 2..])),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: f64,
    pub std_error: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub target: Option<f64>,
    pub z_score: Option<f64>,
    pub seed: u64,
    pub rng: String,
}

impl EstimateReport {
    fn new(m: &Moments, target: Option<f64>, seed: u64) -> Self {
        let std_error = m.std_error();
        Self {
            estimate: m.mean,
            std_error,
            n: m.count,
            target,
            z_score: target.map(|t| z_score(m.mean, t, std_error)),
            seed,
            rng: RNG_ID.to_string(),
        }
    }

    pub fn abs_error(&self) -> Option<f64> {
        self.target.map(|t| (self.estimate - t).abs())
    }
}

/// `(estimate - target) / std_error`. A zero standard error (constant
/// statistic) gives 0 when the estimate matches the target to round-off and
/// ±∞ otherwise.
pub fn z_score(estimate: f64, target: f64, std_error: f64) -> f64 {
    let diff = estimate - target;
    if std_error > 0.0 {
        diff / std_error
    } else if diff.abs() <= 1e-10 * (1.0 + target.abs()) {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Streams `n` samples and accumulates the moments of `stat(ξ)`.
pub fn accumulate<F>(p: &FieldEnsemble, n: usize, seed: u64, stat: F) -> Result<Moments>
where
    F: Fn(&[Complex64]) -> Result<f64> + Sync,
{
    if n == 0 {
        return Err(PcsftError::EmptyBatch);
    }
    let sampler = Sampler::new(p)?;
    let parts: Vec<Moments> = blocks(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(b, _, len)| {
            let mut m = Moments::default();
            let mut err = None;
            sampler.for_each_in_block(seed, b, len, |s| match stat(s) {
                Ok(v) if err.is_none() => m.push(v),
                Ok(_) => {}
                Err(e) => err = err.take().or(Some(e)),
            });
            err.map_or(Ok(m), Err)
        })
        .collect::<Result<_>>()?;
    Ok(merge_tree(&parts))
}

/// Monte Carlo estimate of `<f>_p` against the exact target `Tr B_p A_f`.
pub fn estimate_average(p: &FieldEnsemble, f: &QuadraticForm, n: usize, seed: u64) -> Result<EstimateReport> {
    if n < 2 {
        return Err(PcsftError::InvalidArgument(format!("need N >= 2 samples, got {n}")));
    }
    if p.dim() != f.dim() {
        return Err(PcsftError::Dimension {
            expected: p.dim(),
            found: f.dim(),
        });
    }
    let a = f.generator.matrix();
    let m = accumulate(p, n, seed, |s| form_value(a, s, FORM_TOL))?;
    let target = bild_average_exact(p, f)?;
    Ok(EstimateReport::new(&m, Some(target), seed))
}

/// Empirical `E ||ξ||⁴` against its analytic value.
pub fn estimate_fourth_moment(p: &FieldEnsemble, n: usize, seed: u64) -> Result<EstimateReport> {
    let m = accumulate(p, n, seed, |s| Ok(crate::hilbert::energy_slice(s).powi(2)))?;
    Ok(EstimateReport::new(&m, Some(p.fourth_moment()), seed))
}

fn check_n_list(n_list: &[usize]) -> Result<()> {
    if n_list.len() < 3 {
        return Err(PcsftError::InvalidArgument("sweep needs at least 3 sample sizes".into()));
    }
    if !n_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(PcsftError::InvalidArgument("sample sizes must be strictly ascending".into()));
    }
    Ok(())
}

/// One report per sample size, entry `k` on sub-seed `derive_seed(seed, k)`.
pub fn convergence_sweep(p: &FieldEnsemble, f: &QuadraticForm, n_list: &[usize], seed: u64) -> Result<Vec<EstimateReport>> {
    check_n_list(n_list)?;
    n_list
        .iter()
        .enumerate()
        .map(|(k, &n)| estimate_average(p, f, n, derive_seed(seed, k as u64)))
        .collect()
}

/// Replicated sweeps: RMS error per sample size and the fitted log-log slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub n_list: Vec<usize>,
    pub replications: usize,
    pub rms_errors: Vec<f64>,
    /// `None` when some RMS error is exactly zero (constant statistic).
    pub slope: Option<f64>,
    pub reports: Vec<Vec<EstimateReport>>,
}

pub fn replicated_sweep(
    p: &FieldEnsemble,
    f: &QuadraticForm,
    n_list: &[usize],
    seed: u64,
    replications: usize,
) -> Result<SweepSummary> {
    if replications == 0 {
        return Err(PcsftError::InvalidArgument("replications must be positive".into()));
    }
    let reports: Vec<Vec<EstimateReport>> = (0..replications)
        .map(|r| convergence_sweep(p, f, n_list, derive_seed(seed, 1_000_000 + r as u64)))
        .collect::<Result<_>>()?;
    let rms_errors: Vec<f64> = (0..n_list.len())
        .map(|k| {
            let ss: f64 = reports.iter().map(|run| run[k].abs_error().unwrap_or(0.0).powi(2)).sum();
            (ss / replications as f64).sqrt()
        })
        .collect();
    let slope = if rms_errors.iter().all(|&e| e > 0.0) {
        let xs: Vec<f64> = n_list.iter().map(|&n| (n as f64).ln()).collect();
        let ys: Vec<f64> = rms_errors.iter().map(|e| e.ln()).collect();
        Some(least_squares_slope(&xs, &ys))
    } else {
        None
    };
    Ok(SweepSummary {
        n_list: n_list.to_vec(),
        replications,
        rms_errors,
        slope,
        reports,
    })
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{quadratic_form, CMatrix, FieldState, HermitianOperator};
    use crate::random::{random_hermitian, random_psd, random_state};
    use crate::stream::with_workers;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, -2.5, 8.0, 3.25, 0.0];
        let mut m = Moments::default();
        xs.iter().for_each(|&x| m.push(x));
        let mean = xs.iter().sum::<f64>() / 6.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 5.0;
        assert!((m.mean - mean).abs() < 1e-14);
        assert!((m.variance() - var).abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn merge_equals_sequential(xs in prop::collection::vec(-1e3f64..1e3, 2..200), cut in 0usize..200) {
            let cut = cut.min(xs.len());
            let mut all = Moments::default();
            xs.iter().for_each(|&x| all.push(x));
            let (mut a, mut b) = (Moments::default(), Moments::default());
            xs[..cut].iter().for_each(|&x| a.push(x));
            xs[cut..].iter().for_each(|&x| b.push(x));
            let m = a.merge(&b);
            prop_assert_eq!(m.count, all.count);
            prop_assert!((m.mean - all.mean).abs() <= 1e-9 * (1.0 + all.mean.abs()));
            prop_assert!((m.m2 - all.m2).abs() <= 1e-9 * (1.0 + all.m2.abs()));
        }
    }

    #[test]
    fn two_point_estimate_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = random_state(&mut rng, 3);
        let f = QuadraticForm::new(HermitianOperator::new(random_hermitian(&mut rng, 3)).unwrap());
        let want = quadratic_form(&f, &psi).unwrap();
        let r = estimate_average(&FieldEnsemble::two_point(psi), &f, 50, 4).unwrap();
        assert!((r.estimate - want).abs() <= 1e-12 * want.abs().max(1.0));
        assert!(r.std_error < 1e-12 * want.abs().max(1.0));
        assert!(r.z_score.unwrap().abs() < 5.0);
    }

    #[test]
    fn minimal_batch_well_formed() {
        let p = FieldEnsemble::gaussian(CMatrix::identity(2)).unwrap();
        let r = estimate_average(&p, &QuadraticForm::energy(2), 2, 0).unwrap();
        assert_eq!(r.n, 2);
        assert!(r.std_error.is_finite());
        assert!(r.z_score.is_some());
        assert!(estimate_average(&p, &QuadraticForm::energy(2), 1, 0).is_err());
    }

    #[test]
    fn gaussian_coverage_over_100_seeds() {
        let p = FieldEnsemble::gaussian(CMatrix::from_real_diag(&[1.0, 2.0])).unwrap();
        let f = QuadraticForm::energy(2);
        let reports: Vec<_> = (0..100).map(|s| estimate_average(&p, &f, 100_000, s).unwrap()).collect();
        let covered = reports.iter().filter(|r| r.z_score.unwrap().abs() < 5.0).count();
        assert!(covered >= 95, "{covered}");
        assert!(reports.iter().all(|r| r.target == Some(3.0)));
        // unbiasedness: mean of estimates within 4 standard errors of the mean
        let mean = reports.iter().map(|r| r.estimate).sum::<f64>() / 100.0;
        let se = reports.iter().map(|r| r.std_error).sum::<f64>() / 100.0;
        assert!((mean - 3.0).abs() < 4.0 * se / 10.0);
    }

    /// Var f(ξ) = Tr(BABA) for a circular Gaussian, derived from Isserlis.
    /// Oracle: for diagonal B and A the form is Σ a_j b_j |ζ_j|² with |ζ_j|²
    /// independent unit exponentials, so Var = Σ a_j² b_j².
    #[test]
    fn gaussian_form_variance_closed_form() {
        let b = CMatrix::from_real_diag(&[1.0, 2.0, 0.5]);
        let a = CMatrix::from_real_diag(&[3.0, -1.0, 2.0]);
        let oracle = 9.0 * 1.0 + 1.0 * 4.0 + 4.0 * 0.25;
        let ba = b.matmul(&a).unwrap();
        assert!((ba.trace_product(&ba).unwrap().re - oracle).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let b = random_psd(&mut rng, 3, 3);
        let a = HermitianOperator::new(random_hermitian(&mut rng, 3)).unwrap();
        let ba = b.matmul(a.matrix()).unwrap();
        let var_exact = ba.trace_product(&ba).unwrap().re;
        let p = FieldEnsemble::gaussian(b).unwrap();
        let form = a.matrix().clone();
        let m = accumulate(&p, 100_000, 5, |s| form_value(&form, s, FORM_TOL)).unwrap();
        // SE of the sample variance from the fourth central moment
        let m4 = accumulate(&p, 100_000, 5, |s| {
            let v = form_value(&form, s, FORM_TOL)?;
            Ok((v - m.mean).powi(4))
        })
        .unwrap()
        .mean;
        let var_se = ((m4 - m.variance().powi(2)) / 100_000.0).sqrt();
        assert!((m.variance() - var_exact).abs() < 5.0 * var_se, "{} vs {var_exact} (se {var_se})", m.variance());
    }

    #[test]
    fn sweep_rejects_bad_lists() {
        let p = FieldEnsemble::gaussian(CMatrix::identity(2)).unwrap();
        let f = QuadraticForm::energy(2);
        assert!(convergence_sweep(&p, &f, &[100, 1000], 0).is_err());
        assert!(convergence_sweep(&p, &f, &[100, 100, 1000], 0).is_err());
        assert!(convergence_sweep(&p, &f, &[1000, 100, 10], 0).is_err());
    }

    #[test]
    fn sweep_two_point_constant_form_has_zero_error() {
        let p = FieldEnsemble::two_point(FieldState::basis(3, 1));
        let f = QuadraticForm::energy(3);
        let s = replicated_sweep(&p, &f, &[10, 100, 1000], 3, 4).unwrap();
        assert!(s.rms_errors.iter().all(|&e| e == 0.0));
        assert_eq!(s.slope, None);
    }

    #[test]
    fn sweep_rate_identity_and_traceless_targets() {
        let p = FieldEnsemble::gaussian(CMatrix::identity(4)).unwrap();
        let s = replicated_sweep(&p, &QuadraticForm::energy(4), &[1_000, 10_000, 100_000], 17, 20).unwrap();
        let slope = s.slope.unwrap();
        assert!((slope + 0.5).abs() <= 0.15, "slope {slope}");

        let p = FieldEnsemble::gaussian(CMatrix::from_real_diag(&[1.0, 2.0])).unwrap();
        let sx = HermitianOperator::new(
            CMatrix::from_rows(vec![
                vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
                vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            ])
            .unwrap(),
        )
        .unwrap();
        let s = replicated_sweep(&p, &QuadraticForm::new(sx), &[1_000, 10_000, 100_000], 18, 20).unwrap();
        assert!(s.reports.iter().flatten().all(|r| r.target == Some(0.0)));
        let slope = s.slope.unwrap();
        assert!((slope + 0.5).abs() <= 0.15, "slope {slope}");
    }

    #[test]
    fn report_bit_identical_across_workers() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = FieldEnsemble::gaussian(random_psd(&mut rng, 4, 4)).unwrap();
        let f = QuadraticForm::new(HermitianOperator::new(random_hermitian(&mut rng, 4)).unwrap());
        let reference = with_workers(1, || estimate_average(&p, &f, 20_000, 9).unwrap());
        for w in [2, 8] {
            let r = with_workers(w, || estimate_average(&p, &f, 20_000, 9).unwrap());
            assert_eq!(r.estimate.to_bits(), reference.estimate.to_bits());
            assert_eq!(r.std_error.to_bits(), reference.std_error.to_bits());
        }
    }

    #[test]
    fn slope_fit_exact_on_power_law() {
        let xs: Vec<f64> = [1e3f64, 1e4, 1e5].iter().map(|x| x.ln()).collect();
        let ys: Vec<f64> = [1e3f64, 1e4, 1e5].iter().map(|x| (2.0 * x.powf(-0.5)).ln()).collect();
        assert!((least_squares_slope(&xs, &ys) + 0.5).abs() < 1e-12);
    }
}
