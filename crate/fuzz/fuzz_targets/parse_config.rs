#![no_main]

use libfuzzer_sys::fuzz_target;
use szilard_cli::parse_config;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = parse_config(text) {
            let again = parse_config(&config.to_toml()).expect("normalized config reparses");
            assert_eq!(again.config_hash(), config.config_hash());
        }
    }
});
