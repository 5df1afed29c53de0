#![no_main]

use libfuzzer_sys::fuzz_target;
use pcsft::ensemble::{energy_average, exact_covariance, EnsembleSpec, FieldEnsemble};

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = serde_json::from_slice::<EnsembleSpec>(data) else {
        return;
    };
    if spec.dim > 64 {
        return;
    }
    if let Ok(p) = FieldEnsemble::try_from(spec) {
        let e = energy_average(&p);
        assert!(e >= 0.0);
        let _ = exact_covariance(&p);
    }
});
