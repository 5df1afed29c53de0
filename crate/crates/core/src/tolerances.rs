use serde::{Deserialize, Serialize};

pub const HERM_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-12;
pub const FORM_TOL: f64 = 1e-10;
/// Residual allowed on exact-path identities such as the scaled average identity.
pub const IDENTITY_TOL: f64 = 1e-10;
pub const Z_THRESHOLD: f64 = 5.0;

/// Numerical tolerances used by the validating constructors and checks.
///
/// Every field defaults to the module constant of the same name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub herm_tol: f64,
    pub psd_tol: f64,
    pub trace_tol: f64,
    pub form_tol: f64,
    pub identity_tol: f64,
    pub z_threshold: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm_tol: HERM_TOL,
            psd_tol: PSD_TOL,
            trace_tol: TRACE_TOL,
            form_tol: FORM_TOL,
            identity_tol: IDENTITY_TOL,
            z_threshold: Z_THRESHOLD,
        }
    }
}

impl Tolerances {
    pub fn is_valid(&self) -> bool {
        [
            self.herm_tol,
            self.psd_tol,
            self.trace_tol,
            self.form_tol,
            self.identity_tol,
            self.z_threshold,
        ]
        .iter()
        .all(|t| t.is_finite() && *t > 0.0)
    }
}
