#![no_main]

use libfuzzer_sys::fuzz_target;
use szilard_cli::{compare_tables, read_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(table) = read_csv(text) {
            assert!(table.rows.iter().all(|r| r.len() == table.header.len()));
            assert!(compare_tables(&table, &table, 0.0).is_empty());
        }
    }
});
