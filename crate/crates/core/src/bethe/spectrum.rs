use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use super::solver::{solve_bethe, BetheRoots, SolverConfig};
use super::tuples::{enumerate_tuples, QuantumNumbers};
use crate::error::{Error, Result};
use crate::units::{Coupling, EPS1};

/// One solved level of a segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub tuple: QuantumNumbers,
    pub roots: BetheRoots,
    /// Energy of the same tuple at `g = 0`; the enumeration key.
    pub free_energy: f64,
}

impl Level {
    pub fn energy(&self) -> f64 {
        self.roots.energy
    }
}

/// Energy levels of `n` bosons in a hard-wall segment, ascending in energy.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSpectrum {
    pub n: usize,
    pub length: f64,
    pub coupling: Coupling,
    pub levels: Vec<Level>,
    /// Energy ceiling; every kept level lies at or below it.
    pub cutoff: f64,
    /// Extra free-energy headroom used when enumerating tuples.
    pub margin: f64,
    /// Free energies of tuples that were solved but landed above the ceiling.
    pub discarded: Vec<f64>,
    /// Levels came from the free-fermion map rather than the Bethe solver.
    pub surrogate: bool,
}

impl SegmentSpectrum {
    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(Level::energy).collect()
    }

    pub fn ground_energy(&self) -> Option<f64> {
        self.levels.first().map(Level::energy)
    }

    /// Levels that a fresh call with ceiling `cutoff ≤ self.cutoff` would keep.
    pub fn restricted(&self, cutoff: f64) -> impl Iterator<Item = &Level> + '_ {
        let free_ceiling = enumeration_ceiling(self.n, self.length, cutoff, self.margin);
        self.levels
            .iter()
            .filter(move |l| l.energy() <= cutoff && l.free_energy <= free_ceiling * (1.0 + 1e-12))
    }

    /// Rows of the spectrum CSV (no header).
    pub fn write_csv_rows<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for level in &self.levels {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                self.n,
                self.length,
                self.coupling,
                level.tuple,
                level.energy() / EPS1,
                level.roots.residual_norm
            )?;
        }
        Ok(())
    }
}

pub const SPECTRUM_CSV_HEADER: &str = "n,ell,g,tuple,energy,residual";

/// Spectrum CSV with energies in units of `ε₁`.
pub fn write_spectrum_csv<W: Write>(w: &mut W, spectra: &[SegmentSpectrum]) -> io::Result<()> {
    writeln!(w, "{SPECTRUM_CSV_HEADER}")?;
    for s in spectra {
        s.write_csv_rows(w)?;
    }
    Ok(())
}

/// Free-energy headroom for enumeration. Repulsion only raises levels, so
/// no headroom is needed for `g ≥ 0`.
pub fn truncation_margin(g: f64) -> f64 {
    if g >= 0.0 {
        0.0
    } else {
        10.0 * EPS1 * (1.0 + g.abs())
    }
}

/// Free-energy ceiling for tuple enumeration. Never below the free ground
/// state, so deeply bound segments still enumerate their lowest tuple.
pub(crate) fn enumeration_ceiling(n: usize, ell: f64, e_max: f64, margin: f64) -> f64 {
    let ground = QuantumNumbers::ground(n).free_energy(ell);
    (e_max + margin).max(ground).max(f64::MIN_POSITIVE)
}

fn check_length(ell: f64) -> Result<()> {
    if !(ell > 0.0) || !ell.is_finite() {
        return Err(Error::InvalidArgument(format!("segment length must be positive, got {ell}")));
    }
    Ok(())
}

fn check(ell: f64, e_max: f64) -> Result<()> {
    if !(ell > 0.0) || !ell.is_finite() {
        return Err(Error::InvalidArgument(format!("segment length must be positive, got {ell}")));
    }
    if !(e_max > 0.0) {
        return Err(Error::InvalidArgument(format!("energy ceiling must be positive, got {e_max}")));
    }
    Ok(())
}

/// Solve every tuple whose free energy lies below `e_max + margin` and keep
/// the levels at or below `e_max`.
///
/// With attraction `e_max` may be negative; the free ground tuple is always
/// solved.
pub fn segment_spectrum(n: usize, ell: f64, g: f64, e_max: f64, cfg: &SolverConfig) -> Result<SegmentSpectrum> {
    check_length(ell)?;
    if !e_max.is_finite() || (g >= 0.0 && !(e_max > 0.0)) {
        return Err(Error::InvalidArgument(format!("energy ceiling must be positive, got {e_max}")));
    }
    if !g.is_finite() {
        return Err(Error::InvalidArgument(format!("coupling must be finite, got {g}")));
    }
    if let Some(threshold) = cfg.tonks_surrogate {
        if g >= threshold && n > 1 {
            let mut s = tg_spectrum(n, ell, e_max)?;
            s.coupling = Coupling::Finite(g);
            s.surrogate = true;
            return Ok(s);
        }
    }
    let margin = truncation_margin(g);
    let tuples = enumerate_tuples(n, enumeration_ceiling(n, ell, e_max, margin), ell)?;
    let solved: Vec<Result<Level>> = tuples
        .into_par_iter()
        .map(|tuple| {
            let roots = solve_bethe(&tuple, g, ell, None, cfg)?;
            let free_energy = tuple.free_energy(ell);
            Ok(Level { tuple, roots, free_energy })
        })
        .collect();
    let mut levels = Vec::with_capacity(solved.len());
    let mut discarded = Vec::new();
    for level in solved {
        let level = level?;
        if level.energy() <= e_max {
            levels.push(level);
        } else {
            discarded.push(level.free_energy);
        }
    }
    sort_levels(&mut levels);
    Ok(SegmentSpectrum {
        n,
        length: ell,
        coupling: Coupling::Finite(g),
        levels,
        cutoff: e_max,
        margin,
        discarded,
        surrogate: false,
    })
}

fn sort_levels(levels: &mut [Level]) {
    levels.sort_by(|a, b| a.energy().total_cmp(&b.energy()).then_with(|| a.tuple.cmp(&b.tuple)));
}

/// Infinite-repulsion spectrum: `n` free fermions in a box of length `ell`.
///
/// Levels are labelled by the bosonic tuple `b_α = m_α − α + 1` of the
/// fermionic occupation `m`, so they line up with the Bethe levels they are
/// the limit of.
pub fn tg_spectrum(n: usize, ell: f64, e_max: f64) -> Result<SegmentSpectrum> {
    check(ell, e_max)?;
    let mut levels = Vec::new();
    let mut discarded = Vec::new();
    for tuple in enumerate_tuples(n, e_max, ell)? {
        let free_energy = tuple.free_energy(ell);
        let k: Vec<Complex64> =
            tuple.fermionic().iter().map(|&mi| Complex64::new(PI * f64::from(mi) / ell, 0.0)).collect();
        let energy = 0.5 * k.iter().map(|z| z.re * z.re).sum::<f64>();
        if energy <= e_max {
            levels.push(Level { tuple, roots: BetheRoots { k, residual_norm: 0.0, energy, iterations: 0 }, free_energy });
        } else {
            discarded.push(free_energy);
        }
    }
    sort_levels(&mut levels);
    Ok(SegmentSpectrum {
        n,
        length: ell,
        coupling: Coupling::Tonks,
        levels,
        cutoff: e_max,
        margin: 0.0,
        discarded,
        surrogate: false,
    })
}

/// Dispatch on the coupling kind.
pub fn spectrum_for(n: usize, ell: f64, coupling: Coupling, e_max: f64, cfg: &SolverConfig) -> Result<SegmentSpectrum> {
    match coupling {
        Coupling::Finite(g) => segment_spectrum(n, ell, g, e_max, cfg),
        Coupling::Tonks => tg_spectrum(n, ell, e_max),
    }
}
