//! Random instances for sweeps and self-checks: states, Hermitian and PSD
//! matrices, density operators.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::hilbert::{hermitize, CMatrix, DensityOperator, FieldState};

/// Standard complex normal `(x + iy)/√2`, so `E|ζ|² = 1`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    Complex64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> FieldState {
    FieldState::new((0..dim).map(|_| complex_normal(rng)).collect()).expect("finite normal draws")
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    CMatrix::from_vec(dim, (0..dim * dim).map(|_| complex_normal(rng)).collect()).expect("square")
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    hermitize(&random_matrix(rng, dim)).operator.into_matrix()
}

/// `G G†` with `G` a `dim × rank` complex Gaussian matrix.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> CMatrix {
    let g: Vec<Complex64> = (0..dim * rank).map(|_| complex_normal(rng)).collect();
    let mut out = CMatrix::zeros(dim);
    for j in 0..dim {
        for k in 0..dim {
            out[(j, k)] = crate::sum::pairwise_sum_by(rank, |l| g[j * rank + l] * g[k * rank + l].conj());
        }
    }
    out
}

/// Random density operator whose rank is drawn uniformly from `1..=dim`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityOperator {
    let rank = rng.random_range(1..=dim);
    let b = random_psd(rng, dim, rank);
    let tr = b.trace().re;
    DensityOperator::new(b.scale(1.0 / tr)).expect("normalized PSD matrix")
}
