//! Random classical fields on a complex Hilbert space and their
//! correspondence with density operators and quantum averages.
//!
//! A field ensemble `p` (zero mean, finite energy) has covariance `B_p` and
//! average energy `E_p = Tr B_p`. Normalizing gives the density operator
//! `ρ_p = B_p / E_p`; a quadratic form `f(φ) = <φ|A|φ>` corresponds to the
//! observable `A`, and `<f>_p / E_p = Tr ρ_p A`.

// `!(x > 0.0)` style checks are deliberate: NaN has to fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correspondence;
pub mod ensemble;
pub mod error;
pub mod gridfield;
pub mod hilbert;
pub mod montecarlo;
pub mod random;
pub mod stream;
pub mod sum;
pub mod tolerances;

pub use num_complex::Complex64;

pub use error::{PcsftError, Result};
pub use tolerances::Tolerances;
