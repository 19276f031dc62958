#![no_main]

use ctmc_sens_cli::config::{ExperimentConfig, ModelRef};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ExperimentConfig::from_json(text) else { return };
    // Keep the fuzzer off the file system.
    if matches!(cfg.model, ModelRef::File { .. }) {
        return;
    }
    if let Ok(r) = cfg.resolve() {
        let again = ExperimentConfig::from_json(&r.config.to_json()).expect("re-parse");
        assert_eq!(again.resolve().expect("re-resolve").config, r.config);
    }
});
