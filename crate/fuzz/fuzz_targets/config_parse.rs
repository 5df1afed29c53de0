#![no_main]

use libfuzzer_sys::fuzz_target;
use pcsft_cli::{CommandKind, ExperimentConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(config) = ExperimentConfig::parse(text) else {
        return;
    };
    for kind in [CommandKind::Verify, CommandKind::Estimate, CommandKind::Audit, CommandKind::Gridfield] {
        if let Ok(resolved) = config.clone().resolve(kind, None, None) {
            let json = serde_json::to_string(&resolved).unwrap();
            let _ = ExperimentConfig::parse(&json);
        }
    }
});
