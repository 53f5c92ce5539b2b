//! Thermodynamics of a bosonic quantum Szilard engine with tunable contact
//! interactions.
//!
//! The crate is organised bottom-up:
//!
//! * [`bethe`] enumerates quantum numbers and solves the hard-wall Bethe
//!   equations for the spectrum of `n` bosons in a segment of length `ℓ`.
//! * [`statmech`] turns segment spectra into canonical (sector) partition
//!   functions and measurement probabilities, entirely in the log domain.
//! * [`engine`] evaluates the cycle work, its five-step decomposition and the
//!   Shannon information, and searches for work-maximising feedback protocols.
//!
//! Reduced units are used throughout: `ħ = m = L = 1`, so couplings are in
//! units of `ħ²/(mL)` and the single-particle ground energy of the full box is
//! [`units::EPS1`] `= π²/2`.

pub mod bethe;
pub mod engine;
pub mod error;
pub mod numeric;
pub mod statmech;
pub mod units;

pub use error::{Error, Result};
pub use units::Coupling;
