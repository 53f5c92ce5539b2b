//! Canonical partition functions, sector partition functions and
//! measurement probabilities built from segment spectra.

mod derivative;
mod partition;
mod thermal;

pub use derivative::{thermal_dlnz_dg, DerivativeEstimate};
pub use partition::{partition_function, LogPartition};
pub use thermal::{
    iso_work, snap_position, write_thermal_csv, BoundedPartition, ChamberSpec, ThermalContext, ThermalTable,
    TruncationConfig, THERMAL_CSV_HEADER,
};
