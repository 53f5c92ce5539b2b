use thiserror::Error;

use crate::bethe::QuantumNumbers;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The root finder stopped without reaching the residual tolerance.
    #[error("Bethe solver failed for tuple ({tuple}) at g = {coupling}: best residual {residual:.3e}")]
    SolverFailure {
        tuple: QuantumNumbers,
        coupling: f64,
        residual: f64,
    },

    #[error("unsupported regime for tuple ({tuple}) at g = {coupling}: {reason}")]
    RegimeUnsupported {
        tuple: QuantumNumbers,
        coupling: f64,
        reason: String,
    },

    #[error("truncation not converged: max |Δp| = {delta_p:.3e}, tail bound = {bound:.3e}")]
    TruncationNotConverged { delta_p: f64, bound: f64 },

    #[error("finite-difference derivative did not stabilise (last change {change:.3e})")]
    DerivativeUnstable { change: f64 },

    #[error("optimization failed: {0}")]
    OptimizationFailed(String),
}
