#![no_main]

use libfuzzer_sys::fuzz_target;
use pcsft::hilbert::{field_energy, FieldState};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = serde_json::from_slice::<FieldState>(data) {
        assert!(field_energy(&s) >= 0.0);
        let back: FieldState = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
});
