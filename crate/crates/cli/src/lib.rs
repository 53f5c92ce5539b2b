//! Scenario runner for the interacting-boson Szilard engine.
//!
//! A [`RunConfig`] is read from a small TOML document, a scenario sweeps it
//! over `(N, T, g^ins)` and writes figure-ready CSV files plus a JSON
//! manifest, and golden copies of those files back the regression tests.

pub mod config;
pub mod error;
pub mod golden;
pub mod scenario;

pub use config::{parse_config, parse_setting, RunConfig, Scenario, TemperatureScale, Tolerances};
pub use error::{CliError, Result};
pub use golden::{compare_tables, emit_goldens, golden_dir, read_csv, CsvTable, GOLDEN_CONFIG, GOLDEN_FORMAT};
pub use scenario::{compute, run_scenario, Failure, ResultSet, ScenarioOutput, SkippedGrid, VERSION};
