use rayon::prelude::*;

use super::partition::partition_function;
use super::thermal::ThermalContext;
use crate::bethe::{solve_bethe, Level, SolverConfig};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::units::Coupling;

/// Two independent estimates of the coupling derivative of a segment's free
/// energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeEstimate {
    /// `kT ∂ln Z/∂g` from central differences of `ln Z`.
    pub from_partition: f64,
    /// `−⟨∂E/∂g⟩` from per-level central differences, Boltzmann-averaged.
    pub from_levels: f64,
    /// Smallest step used.
    pub step: f64,
}

const MAX_HALVINGS: u32 = 10;
const REL_TOL: f64 = 1e-9;
const WINDOW: f64 = 80.0;

/// `kT ∂ln Z/∂g` and `−⟨∂E/∂g⟩` for `n` particles in a segment of length
/// `ell`, over the levels present at `g` (the level set is held fixed).
///
/// Both use Richardson-extrapolated central differences; the step starts at
/// `dg` and is halved until successive extrapolations agree.
pub fn thermal_dlnz_dg(ctx: &ThermalContext, n: usize, ell: f64, g: f64, kt: f64, dg: f64) -> Result<DerivativeEstimate> {
    if !(dg > 0.0) || !dg.is_finite() || !g.is_finite() {
        return Err(Error::InvalidArgument(format!("need finite g and positive step, got g = {g}, dg = {dg}")));
    }
    if !(ell > 0.0) || !ell.is_finite() {
        return Err(Error::InvalidArgument(format!("segment length must be positive, got {ell}")));
    }
    if n <= 1 {
        return Ok(DerivativeEstimate { from_partition: 0.0, from_levels: 0.0, step: dg });
    }
    let (levels, _) = ctx.levels(n, ell, Coupling::Finite(g), kt, WINDOW)?;
    let energies: Vec<f64> = levels.iter().map(Level::energy).collect();
    let z0 = partition_function(&energies, kt)?;
    let weights: Vec<f64> = energies.iter().map(|&e| (-(e - z0.shift) / kt).exp() / z0.sum).collect();
    let cfg = SolverConfig { tolerance: ctx.solver().tolerance.min(1e-13), ..ctx.solver().clone() };

    let shifted = |h: f64| -> Result<Vec<f64>> {
        levels
            .par_iter()
            .map(|l| Ok(solve_bethe(&l.tuple, g + h, ell, Some(&l.roots.k), &cfg)?.energy))
            .collect()
    };
    let central = |h: f64| -> Result<(f64, f64)> {
        let up = shifted(h)?;
        let down = shifted(-h)?;
        let d_part = kt * (partition_function(&up, kt)?.log_ratio(&partition_function(&down, kt)?)) / (2.0 * h);
        let mut acc = CompensatedSum::new();
        for ((w, u), d) in weights.iter().zip(&up).zip(&down) {
            acc.add(-w * (u - d) / (2.0 * h));
        }
        Ok((d_part, acc.value()))
    };

    let mut h = dg;
    let mut coarse = central(h)?;
    let mut prev: Option<(f64, f64)> = None;
    let mut change = f64::INFINITY;
    for _ in 0..MAX_HALVINGS {
        h *= 0.5;
        let fine = central(h)?;
        let rich = ((4.0 * fine.0 - coarse.0) / 3.0, (4.0 * fine.1 - coarse.1) / 3.0);
        if let Some(p) = prev {
            let scale = rich.0.abs().max(rich.1.abs()).max(1e-300);
            change = ((rich.0 - p.0).abs().max((rich.1 - p.1).abs())) / scale;
            if change <= REL_TOL {
                return Ok(DerivativeEstimate { from_partition: rich.0, from_levels: rich.1, step: h });
            }
        }
        prev = Some(rich);
        coarse = fine;
    }
    Err(Error::DerivativeUnstable { change })
}
