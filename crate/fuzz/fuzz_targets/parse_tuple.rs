#![no_main]

use libfuzzer_sys::fuzz_target;
use szilard_core::bethe::QuantumNumbers;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(q) = s.parse::<QuantumNumbers>() {
            assert_eq!(q.to_string().parse::<QuantumNumbers>().expect("display reparses"), q);
        }
    }
});
