//! Spectra of contact-interacting bosons in a hard-wall segment.

mod solver;
mod spectrum;
mod tuples;

pub use solver::{solve_bethe, BetheRoots, SolverConfig};
pub use spectrum::{
    segment_spectrum, spectrum_for, tg_spectrum, truncation_margin, write_spectrum_csv, Level, SegmentSpectrum,
    SPECTRUM_CSV_HEADER,
};
pub use tuples::{enumerate_tuples, QuantumNumbers};
pub(crate) use spectrum::enumeration_ceiling;
