#![no_main]

use libfuzzer_sys::fuzz_target;
use lls_core::config::parse_override;
use lls_core::{Preset, ScenarioConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(arg) = std::str::from_utf8(data) else { return };
    let Ok((key, value)) = parse_override(arg) else { return };
    let mut cfg = ScenarioConfig::preset(Preset::Paper);
    if cfg.set(&key, &value).is_ok() {
        let _ = cfg.validate();
        let again = ScenarioConfig::from_text(Preset::Paper, &cfg.to_text()).unwrap();
        assert_eq!(again, cfg);
    }
});
