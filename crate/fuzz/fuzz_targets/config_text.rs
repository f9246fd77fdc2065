#![no_main]

use libfuzzer_sys::fuzz_target;
use lls_core::{Preset, ScenarioConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ScenarioConfig::from_text(Preset::Desk, text) {
        // Whatever parsed must render and parse back to itself.
        let again = ScenarioConfig::from_text(Preset::Paper, &cfg.to_text()).unwrap();
        assert_eq!(again, cfg);
        let _ = cfg.validate();
    }
});
