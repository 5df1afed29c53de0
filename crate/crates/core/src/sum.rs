//! Pairwise (tree) summation with a fixed reduction order.
//!
//! Every reduction in the crate goes through these helpers so that results
//! depend only on the operand sequence, never on scheduling.

use num_complex::Complex64;
use std::ops::Add;

const LEAF: usize = 8;

pub trait Summand: Copy + Add<Output = Self> {
    const ZERO: Self;
}

impl Summand for f64 {
    const ZERO: Self = 0.0;
}

impl Summand for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
}

pub fn pairwise_sum<T: Summand>(xs: &[T]) -> T {
    pairwise_sum_by(xs.len(), |i| xs[i])
}

/// Sums `term(0) + ... + term(n - 1)` as a balanced binary tree.
pub fn pairwise_sum_by<T: Summand, F: Fn(usize) -> T>(n: usize, term: F) -> T {
    sum_range(0, n, &term)
}

fn sum_range<T: Summand, F: Fn(usize) -> T>(lo: usize, hi: usize, term: &F) -> T {
    if hi - lo <= LEAF {
        let mut acc = T::ZERO;
        for i in lo..hi {
            acc = acc + term(i);
        }
        acc
    } else {
        let mid = lo + (hi - lo) / 2;
        sum_range(lo, mid, term) + sum_range(mid, hi, term)
    }
}
