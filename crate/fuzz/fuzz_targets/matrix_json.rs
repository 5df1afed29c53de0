#![no_main]

use libfuzzer_sys::fuzz_target;
use pcsft::hilbert::{CMatrix, HermitianOperator};

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = serde_json::from_slice::<CMatrix>(data) {
        let back: CMatrix = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        let _ = HermitianOperator::new(m);
    }
});
