//! Reduced units (`ħ = m = L = 1`) and the coupling type shared by all modules.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Single-particle ground energy of the full box, `ε₁ = π²/2`.
pub const EPS1: f64 = PI * PI / 2.0;

/// Energy of the `i`-th single-particle level of the full box, `ε_i = π² i²/2`.
pub fn eps(i: usize) -> f64 {
    let i = i as f64;
    EPS1 * i * i
}

/// `Δε_N = ε_{N+1} − ε_N = (2N + 1) ε₁`.
pub fn delta_eps(n_particles: usize) -> f64 {
    (2 * n_particles + 1) as f64 * EPS1
}

/// Contact coupling `g` in units of `ħ²/(mL)`.
///
/// `Tonks` is the infinite-repulsion sentinel; spectra for it come from the
/// free-fermion mapping instead of the Bethe equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    Finite(f64),
    Tonks,
}

impl Coupling {
    pub fn finite(self) -> Option<f64> {
        match self {
            Coupling::Finite(g) => Some(g),
            Coupling::Tonks => None,
        }
    }

    /// `|g|`, with the sentinel mapped to `+∞`.
    pub fn magnitude(self) -> f64 {
        match self {
            Coupling::Finite(g) => g.abs(),
            Coupling::Tonks => f64::INFINITY,
        }
    }

    /// Value used for ordering and hashing; the sentinel maps to `+∞`.
    pub fn as_f64(self) -> f64 {
        match self {
            Coupling::Finite(g) => g,
            Coupling::Tonks => f64::INFINITY,
        }
    }

    pub(crate) fn key(self) -> u64 {
        self.as_f64().to_bits()
    }
}

impl From<f64> for Coupling {
    fn from(g: f64) -> Self {
        if g == f64::INFINITY {
            Coupling::Tonks
        } else {
            Coupling::Finite(g)
        }
    }
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coupling::Finite(g) => write!(f, "{g}"),
            Coupling::Tonks => f.write_str("inf"),
        }
    }
}

impl FromStr for Coupling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "tg" | "tonks" => Ok(Coupling::Tonks),
            _ => {
                let g: f64 = t
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("not a coupling: {s:?}")))?;
                if g.is_nan() || g == f64::NEG_INFINITY {
                    return Err(Error::InvalidArgument(format!("not a coupling: {s:?}")));
                }
                Ok(Coupling::from(g))
            }
        }
    }
}
