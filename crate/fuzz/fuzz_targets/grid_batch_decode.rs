#![no_main]

use libfuzzer_sys::fuzz_target;
use pcsft::gridfield::GridBatch;

fuzz_target!(|data: &[u8]| {
    if let Ok(batch) = GridBatch::from_bytes(data) {
        let bytes = batch.to_bytes();
        assert_eq!(GridBatch::from_bytes(&bytes).unwrap().to_bytes(), bytes);
    }
});
