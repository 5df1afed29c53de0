#![no_main]

use libfuzzer_sys::fuzz_target;
use pcsft::ensemble::SampleBatch;

fuzz_target!(|data: &[u8]| {
    if let Ok(batch) = SampleBatch::from_bytes(data) {
        assert_eq!(batch.to_bytes(), data);
    }
});
