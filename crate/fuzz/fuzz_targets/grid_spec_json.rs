#![no_main]

use libfuzzer_sys::fuzz_target;
use pcsft::gridfield::{Grid, GridSpec};

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = serde_json::from_slice::<GridSpec>(data) else {
        return;
    };
    if spec.axes.iter().map(|a| a.points.max(1)).try_fold(1usize, |acc, p| acc.checked_mul(p)).is_none_or(|n| n > 1 << 16) {
        return;
    }
    if let Ok(grid) = Grid::new(spec) {
        assert_eq!(grid.weights().len(), grid.len());
        assert!(grid.weights().iter().all(|w| *w >= 0.0));
    }
});
