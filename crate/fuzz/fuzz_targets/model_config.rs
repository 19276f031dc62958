#![no_main]

use ctmc_sens::model::{Model, ModelConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = Model::from_json(text) {
        // A model that builds must survive a round trip unchanged.
        let again = ModelConfig::from_json(&model.config.to_json()).expect("re-parse");
        assert_eq!(again.build().expect("re-build"), model);
    }
});
