#![no_main]

use libfuzzer_sys::fuzz_target;
use szilard_cli::{parse_setting, Scenario, TemperatureScale};
use szilard_core::engine::Mode;
use szilard_core::Coupling;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(setting) = parse_setting(s) {
            assert!(setting.ell > 0.0 && setting.ell < 1.0);
        }
        if let Ok(c) = s.parse::<Coupling>() {
            assert!(!c.as_f64().is_nan());
        }
        let _ = s.parse::<Mode>();
        let _ = s.parse::<Scenario>();
        let _ = s.parse::<TemperatureScale>();
    }
});
