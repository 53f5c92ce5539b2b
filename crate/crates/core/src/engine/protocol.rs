use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::units::Coupling;

/// Feedback variant: `Driven` keeps the barrier at `L/2` and tunes only the
/// coupling; `Assisted` also moves the barrier before removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Driven,
    Assisted,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Driven => "driven",
            Mode::Assisted => "assisted",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "driven" => Ok(Mode::Driven),
            "assisted" => Ok(Mode::Assisted),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?} (expected driven or assisted)"))),
        }
    }
}

/// Barrier position and coupling at one stage of the cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setting {
    pub ell: f64,
    pub coupling: Coupling,
}

impl Setting {
    pub fn new(ell: f64, coupling: Coupling) -> Self {
        Self { ell, coupling }
    }
}

/// Insertion setting plus one removal setting per measurement outcome
/// `n = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    n_particles: usize,
    mode: Mode,
    insertion: Setting,
    branches: Vec<Setting>,
}

impl Protocol {
    pub fn new(n_particles: usize, mode: Mode, insertion: Setting, branches: Vec<Setting>) -> Result<Self> {
        if n_particles == 0 {
            return Err(Error::InvalidArgument("protocol needs at least one particle".into()));
        }
        if branches.len() != n_particles + 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {} branches for N = {n_particles}, got {}",
                n_particles + 1,
                branches.len()
            )));
        }
        for s in std::iter::once(&insertion).chain(&branches) {
            if !(s.ell > 0.0 && s.ell < 1.0) {
                return Err(Error::InvalidArgument(format!("barrier position must lie in (0, 1), got {}", s.ell)));
            }
            if let Coupling::Finite(g) = s.coupling {
                if !g.is_finite() {
                    return Err(Error::InvalidArgument(format!("coupling must be finite, got {g}")));
                }
            }
            if mode == Mode::Driven && s.ell != 0.5 {
                return Err(Error::InvalidArgument(format!("driven mode keeps the barrier at 1/2, got {}", s.ell)));
            }
        }
        Ok(Self { n_particles, mode, insertion, branches })
    }

    /// Every branch removes the barrier where and how it was inserted.
    pub fn identity(n_particles: usize, mode: Mode, insertion: Setting) -> Result<Self> {
        Self::new(n_particles, mode, insertion, vec![insertion; n_particles + 1])
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn insertion(&self) -> Setting {
        self.insertion
    }

    pub fn branches(&self) -> &[Setting] {
        &self.branches
    }

    /// Copy with branch `n` replaced.
    pub fn with_branch(&self, n: usize, setting: Setting) -> Result<Self> {
        let mut branches = self.branches.clone();
        let slot = branches
            .get_mut(n)
            .ok_or_else(|| Error::InvalidArgument(format!("branch {n} out of range")))?;
        *slot = setting;
        Self::new(self.n_particles, self.mode, self.insertion, branches)
    }
}
