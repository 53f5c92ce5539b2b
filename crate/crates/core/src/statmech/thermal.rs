use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{self, Write};
use std::sync::{Arc, Mutex};

use super::partition::{partition_function, LogPartition};
use crate::bethe::enumeration_ceiling;
use crate::bethe::{solve_bethe, spectrum_for, Level, QuantumNumbers, SegmentSpectrum, SolverConfig};
use crate::error::{Error, Result};
use crate::numeric::golden_max;
use crate::units::{Coupling, EPS1};

/// Barrier positions are resolved on a dyadic grid of this many points, so
/// that `1 − (1 − ℓ)` reproduces `ℓ` and mirrored chambers share spectra.
const POSITION_GRID: f64 = (1u64 << 40) as f64;

/// Snap a barrier position to the `2⁻⁴⁰` grid.
pub fn snap_position(ell: f64) -> f64 {
    (ell * POSITION_GRID).round() / POSITION_GRID
}

/// Adaptive cutoff policy: `e_max = E₀ + window·kT`, with the window doubled
/// up to `raises` times.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationConfig {
    pub initial_window: f64,
    pub raises: u32,
    /// Largest accepted change of any `p_n` (or of `ln Z`) between windows.
    pub p_tolerance: f64,
    /// Largest accepted relative tail bound.
    pub tail_tolerance: f64,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self { initial_window: 40.0, raises: 2, p_tolerance: 1e-8, tail_tolerance: 1e-6 }
    }
}

impl TruncationConfig {
    fn windows(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.raises).map(|k| self.initial_window * f64::from(1u32 << k))
    }
}

/// A truncated partition function with a bound on the relative weight of
/// everything left out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedPartition {
    pub z: LogPartition,
    pub tail_bound: f64,
}

impl BoundedPartition {
    fn times(&self, other: &Self) -> Self {
        Self {
            z: self.z.times(&other.z),
            tail_bound: (1.0 + self.tail_bound) * (1.0 + other.tail_bound) - 1.0,
        }
    }
}

/// Chamber state for free-energy differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChamberSpec {
    pub n_particles: usize,
    /// Barrier position, or `None` for the open box.
    pub barrier: Option<f64>,
    pub coupling: Coupling,
    pub kt: f64,
    /// Restrict to `n` particles on the left of the barrier.
    pub sector: Option<usize>,
}

impl ChamberSpec {
    pub fn open(n_particles: usize, coupling: Coupling, kt: f64) -> Self {
        Self { n_particles, barrier: None, coupling, kt, sector: None }
    }

    pub fn split(n_particles: usize, ell: f64, coupling: Coupling, kt: f64) -> Self {
        Self { n_particles, barrier: Some(ell), coupling, kt, sector: None }
    }

    pub fn with_sector(self, n: usize) -> Self {
        Self { sector: Some(n), ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::InvalidArgument("chamber needs at least one particle".into()));
        }
        check_kt(self.kt)?;
        check_coupling(self.coupling)?;
        match (self.barrier, self.sector) {
            (Some(ell), _) => check_position(ell)?,
            (None, Some(_)) => return Err(Error::InvalidArgument("sector restriction needs a barrier".into())),
            (None, None) => {}
        }
        if let Some(n) = self.sector {
            if n > self.n_particles {
                return Err(Error::InvalidArgument(format!("sector {n} exceeds N = {}", self.n_particles)));
            }
        }
        Ok(())
    }
}

/// Sector partition functions and measurement probabilities for one barrier
/// position.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalTable {
    pub n_particles: usize,
    pub ell: f64,
    pub coupling: Coupling,
    pub kt: f64,
    pub z_total: LogPartition,
    pub z_sector: Vec<LogPartition>,
    pub p: Vec<f64>,
    pub truncation_error_bound: f64,
    /// Window (in units of `kT` above the ground state) that was accepted.
    pub window: f64,
}

pub const THERMAL_CSV_HEADER: &str = "N,ell,g,kT,n,Zn_log,pn,trunc_bound";

impl ThermalTable {
    /// CSV rows (no header); `kT` in units of `ε₁`.
    pub fn write_csv_rows<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for (n, (z, p)) in self.z_sector.iter().zip(&self.p).enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{:e}",
                self.n_particles,
                self.ell,
                self.coupling,
                self.kt / EPS1,
                n,
                z.ln(),
                p,
                self.truncation_error_bound
            )?;
        }
        Ok(())
    }
}

pub fn write_thermal_csv<W: Write>(w: &mut W, tables: &[ThermalTable]) -> io::Result<()> {
    writeln!(w, "{THERMAL_CSV_HEADER}")?;
    for t in tables {
        t.write_csv_rows(w)?;
    }
    Ok(())
}

fn check_kt(kt: f64) -> Result<()> {
    if kt > 0.0 && kt.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("temperature must be positive, got {kt}")))
    }
}

fn check_position(ell: f64) -> Result<()> {
    if ell > 0.0 && ell < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("barrier position must lie in (0, 1), got {ell}")))
    }
}

fn check_coupling(c: Coupling) -> Result<()> {
    match c {
        Coupling::Finite(g) if !g.is_finite() => Err(Error::InvalidArgument(format!("coupling must be finite, got {g}"))),
        _ => Ok(()),
    }
}

type SegmentKey = (usize, u64, u64);

#[derive(Default)]
struct CacheEntry {
    ground: Option<f64>,
    spectrum: Option<Arc<SegmentSpectrum>>,
}

/// Solver and truncation settings plus a memo of segment spectra.
///
/// Spectra are keyed by `(n, ℓ, g)` and reused for any smaller cutoff, which
/// gives the same levels as a fresh solve. Results do not depend on the order
/// in which concurrent callers fill the cache.
pub struct ThermalContext {
    solver: SolverConfig,
    truncation: TruncationConfig,
    cache: Mutex<HashMap<SegmentKey, CacheEntry>>,
}

impl Default for ThermalContext {
    fn default() -> Self {
        Self::new(SolverConfig::default(), TruncationConfig::default())
    }
}

impl ThermalContext {
    pub fn new(solver: SolverConfig, truncation: TruncationConfig) -> Self {
        Self { solver, truncation, cache: Mutex::new(HashMap::new()) }
    }

    pub fn solver(&self) -> &SolverConfig {
        &self.solver
    }

    pub fn truncation(&self) -> &TruncationConfig {
        &self.truncation
    }

    fn key(n: usize, ell: f64, coupling: Coupling) -> SegmentKey {
        (n, ell.to_bits(), coupling.key())
    }

    /// Ground-state energy of `n` particles in a segment of length `ell`.
    pub fn ground_energy(&self, n: usize, ell: f64, coupling: Coupling) -> Result<f64> {
        let key = Self::key(n, ell, coupling);
        if let Some(e) = self.cache.lock().expect("cache poisoned").get(&key).and_then(|c| c.ground) {
            return Ok(e);
        }
        let e = match coupling {
            _ if n == 0 => 0.0,
            Coupling::Tonks => tonks_ground(n, ell),
            Coupling::Finite(g) if self.solver.tonks_surrogate.is_some_and(|t| g >= t && n > 1) => tonks_ground(n, ell),
            Coupling::Finite(g) => solve_bethe(&QuantumNumbers::ground(n), g, ell, None, &self.solver)?.energy,
        };
        self.cache.lock().expect("cache poisoned").entry(key).or_default().ground = Some(e);
        Ok(e)
    }

    /// Spectrum with ceiling at least `e_max`.
    fn spectrum(&self, n: usize, ell: f64, coupling: Coupling, e_max: f64) -> Result<Arc<SegmentSpectrum>> {
        let key = Self::key(n, ell, coupling);
        if let Some(s) = self.cache.lock().expect("cache poisoned").get(&key).and_then(|c| c.spectrum.clone()) {
            if s.cutoff >= e_max {
                return Ok(s);
            }
        }
        let fresh = Arc::new(spectrum_for(n, ell, coupling, e_max, &self.solver)?);
        let mut cache = self.cache.lock().expect("cache poisoned");
        let entry = cache.entry(key).or_default();
        match &entry.spectrum {
            Some(s) if s.cutoff >= fresh.cutoff => {}
            _ => entry.spectrum = Some(fresh.clone()),
        }
        Ok(fresh)
    }

    /// Levels of a segment up to `E₀ + window·kT`, with the ceiling used.
    pub fn levels(&self, n: usize, ell: f64, coupling: Coupling, kt: f64, window: f64) -> Result<(Vec<Level>, f64)> {
        check_kt(kt)?;
        let e0 = self.ground_energy(n, ell, coupling)?;
        let cutoff = e0 + window * kt;
        let spec = self.spectrum(n, ell, coupling, cutoff)?;
        Ok((spec.restricted(cutoff).cloned().collect(), cutoff))
    }

    /// Truncated single-segment partition function at a fixed window.
    pub fn segment_partition(&self, n: usize, ell: f64, coupling: Coupling, kt: f64, window: f64) -> Result<BoundedPartition> {
        check_kt(kt)?;
        check_coupling(coupling)?;
        if n == 0 {
            return Ok(BoundedPartition { z: LogPartition::unit(kt), tail_bound: 0.0 });
        }
        let e0 = self.ground_energy(n, ell, coupling)?;
        let cutoff = e0 + window * kt;
        let spec = self.spectrum(n, ell, coupling, cutoff)?;
        let free_ceiling = enumeration_ceiling(n, ell, cutoff, spec.margin);
        let mut energies = Vec::new();
        let mut dropped = 0usize;
        for level in &spec.levels {
            if level.free_energy <= free_ceiling * (1.0 + 1e-12) {
                if level.energy() <= cutoff {
                    energies.push(level.energy());
                } else {
                    dropped += 1;
                }
            }
        }
        dropped += spec.discarded.iter().filter(|&&f| f <= free_ceiling * (1.0 + 1e-12)).count();
        let z = partition_function(&energies, kt)?;
        let tail_bound = tail_bound(n, ell, free_ceiling, spec.margin, cutoff, dropped, &z);
        Ok(BoundedPartition { z, tail_bound })
    }

    /// `Z_n = Z⁽ⁿ⁾(ℓ) · Z⁽ᴺ⁻ⁿ⁾(1 − ℓ)` at a fixed window.
    pub fn sector_at(&self, n: usize, n_particles: usize, ell: f64, coupling: Coupling, kt: f64, window: f64) -> Result<BoundedPartition> {
        check_position(ell)?;
        if n > n_particles {
            return Err(Error::InvalidArgument(format!("sector {n} exceeds N = {n_particles}")));
        }
        let ell = snap_position(ell);
        let left = self.segment_partition(n, ell, coupling, kt, window)?;
        let right = self.segment_partition(n_particles - n, 1.0 - ell, coupling, kt, window)?;
        Ok(left.times(&right))
    }

    /// Sector partition function with adaptive cutoffs: accepted once `ln Z_n`
    /// moves by less than the tolerance between windows.
    pub fn sector_partition(&self, n: usize, n_particles: usize, ell: f64, coupling: Coupling, kt: f64) -> Result<BoundedPartition> {
        self.adapt(|w| self.sector_at(n, n_particles, ell, coupling, kt, w))
    }

    /// `Z_N(L, g)`: the open box, adaptively truncated.
    pub fn full_box(&self, n_particles: usize, coupling: Coupling, kt: f64) -> Result<BoundedPartition> {
        self.adapt(|w| self.segment_partition(n_particles, 1.0, coupling, kt, w))
    }

    fn adapt<F>(&self, eval: F) -> Result<BoundedPartition>
    where
        F: Fn(f64) -> Result<BoundedPartition>,
    {
        let windows: Vec<f64> = self.truncation.windows().collect();
        if let Some(&w) = windows.get(1) {
            eval(w)?;
        }
        let mut prev: Option<BoundedPartition> = None;
        let mut last = (f64::INFINITY, f64::INFINITY);
        for w in windows {
            let cur = eval(w)?;
            if let Some(p) = prev {
                let delta = (cur.z.log_ratio(&p.z)).abs();
                last = (delta, cur.tail_bound);
                if delta < self.truncation.p_tolerance && cur.tail_bound < self.truncation.tail_tolerance {
                    return Ok(cur);
                }
            }
            prev = Some(cur);
        }
        Err(Error::TruncationNotConverged { delta_p: last.0, bound: last.1 })
    }

    fn table_at(&self, n_particles: usize, ell: f64, coupling: Coupling, kt: f64, window: f64) -> Result<ThermalTable> {
        let ell = snap_position(ell);
        let sectors = (0..=n_particles)
            .map(|n| self.sector_at(n, n_particles, ell, coupling, kt, window))
            .collect::<Result<Vec<_>>>()?;
        let z_sector: Vec<LogPartition> = sectors.iter().map(|s| s.z).collect();
        let z_total = LogPartition::sum_of(&z_sector).expect("at least one sector");
        let p = z_sector.iter().map(|z| z.log_ratio(&z_total).exp()).collect();
        let truncation_error_bound = sectors.iter().map(|s| s.tail_bound).fold(0.0, f64::max);
        Ok(ThermalTable { n_particles, ell, coupling, kt, z_total, z_sector, p, truncation_error_bound, window })
    }

    /// Measurement probabilities `p_n = Z_n / Σ_m Z_m` for a barrier at `ell`.
    ///
    /// The window is doubled until no `p_n` moves by more than the tolerance
    /// and the tail bound is below its tolerance.
    pub fn probabilities(&self, n_particles: usize, ell: f64, coupling: Coupling, kt: f64) -> Result<ThermalTable> {
        if n_particles == 0 {
            return Err(Error::InvalidArgument("need at least one particle".into()));
        }
        check_kt(kt)?;
        check_position(ell)?;
        check_coupling(coupling)?;
        let windows: Vec<f64> = self.truncation.windows().collect();
        if let Some(&w) = windows.get(1) {
            self.table_at(n_particles, ell, coupling, kt, w)?;
        }
        let mut prev: Option<ThermalTable> = None;
        let mut last = (f64::INFINITY, f64::INFINITY);
        for w in windows {
            let cur = self.table_at(n_particles, ell, coupling, kt, w)?;
            if let Some(p) = &prev {
                let delta = cur.p.iter().zip(&p.p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                last = (delta, cur.truncation_error_bound);
                if delta < self.truncation.p_tolerance && cur.truncation_error_bound < self.truncation.tail_tolerance {
                    return Ok(cur);
                }
            }
            prev = Some(cur);
        }
        Err(Error::TruncationNotConverged { delta_p: last.0, bound: last.1 })
    }

    /// `Z` of a chamber state, adaptively truncated.
    pub fn chamber_partition(&self, spec: &ChamberSpec) -> Result<BoundedPartition> {
        spec.validate()?;
        match (spec.barrier, spec.sector) {
            (None, _) => self.full_box(spec.n_particles, spec.coupling, spec.kt),
            (Some(ell), Some(n)) => self.sector_partition(n, spec.n_particles, ell, spec.coupling, spec.kt),
            (Some(ell), None) => {
                let t = self.probabilities(spec.n_particles, ell, spec.coupling, spec.kt)?;
                Ok(BoundedPartition { z: t.z_total, tail_bound: t.truncation_error_bound })
            }
        }
    }
}

/// Isothermal work `kT ln(Z_f / Z_i)`; positive means work extracted.
pub fn iso_work(ctx: &ThermalContext, initial: &ChamberSpec, final_state: &ChamberSpec) -> Result<f64> {
    if initial.kt != final_state.kt {
        return Err(Error::InvalidArgument(format!(
            "isothermal work needs equal temperatures, got {} and {}",
            initial.kt, final_state.kt
        )));
    }
    let zi = ctx.chamber_partition(initial)?;
    let zf = ctx.chamber_partition(final_state)?;
    Ok(initial.kt * zf.z.log_ratio(&zi.z))
}

fn tonks_ground(n: usize, ell: f64) -> f64 {
    let n = n as f64;
    EPS1 / (ell * ell) * n * (n + 1.0) * (2.0 * n + 1.0) / 6.0
}

/// `ln θ(c)` with `θ(c) = Σ_{b≥1} exp(−c b²)`, by direct summation or, for
/// small `c`, its Poisson-resummed form.
fn ln_theta(c: f64) -> f64 {
    if c >= 1.0 {
        let mut s = 0.0;
        let mut b = 1.0f64;
        loop {
            let t = (-c * (b * b - 1.0)).exp();
            s += t;
            if t <= 1e-18 * s {
                return -c + s.ln();
            }
            b += 1.0;
        }
    } else {
        let mut dual = 1.0;
        let mut k = 1.0f64;
        loop {
            let t = 2.0 * (-PI * PI * k * k / c).exp();
            dual += t;
            if t <= 1e-18 {
                break;
            }
            k += 1.0;
        }
        (0.5 * ((PI / c).sqrt() * dual - 1.0)).ln()
    }
}

/// `ln Σ exp(−a|x|²)` over `x ∈ ℤ₊ⁿ` with `|x|² ≥ b`, bounded by
/// `min_s [−s a b + n ln θ((1 − s) a)]`.
fn ln_lattice_tail(a: f64, b: f64, n: usize) -> f64 {
    let nf = n as f64;
    let f = |s: f64| -s * a * b + nf * ln_theta((1.0 - s) * a);
    let at_zero = f(0.0);
    let best = golden_max(|s| Some(-f(s)), 0.0, 1.0 - 1e-12, 1e-12, 300).map_or(f64::INFINITY, |(_, v)| -v);
    at_zero.min(best)
}

/// Relative weight of the levels missing from a truncated segment sum.
///
/// Tuples above the enumeration ceiling are bounded by the free lattice sum,
/// shifted by the enumeration margin; solved levels above the cutoff count
/// at the cutoff.
fn tail_bound(n: usize, ell: f64, free_ceiling: f64, margin: f64, cutoff: f64, dropped: usize, z: &LogPartition) -> f64 {
    let unit = EPS1 / (ell * ell);
    let kt = z.kt;
    let first_missing = (free_ceiling / unit * (1.0 + 1e-12) + 1e-9).floor() + 1.0;
    let ln_missing = ln_lattice_tail(unit / kt, first_missing, n) + margin / kt;
    let ln_z = z.ln();
    let mut bound = (ln_missing - ln_z).exp();
    if dropped > 0 {
        bound += dropped as f64 * (-cutoff / kt - ln_z).exp();
    }
    bound
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_branches_agree() {
        for c in [0.999_999, 1.0] {
            let direct: f64 = (1..400).map(|b| (-c * f64::from(b * b)).exp()).sum();
            assert!((ln_theta(c).exp() - direct).abs() < 1e-13);
        }
        let c = 0.01;
        let direct: f64 = (1..2000).map(|b| (-c * f64::from(b * b)).exp()).sum();
        assert!((ln_theta(c).exp() - direct).abs() < 1e-11 * direct);
        assert!((ln_theta(2000.0) + 2000.0).abs() < 1e-15);
    }

    #[test]
    fn lattice_tail_bounds_direct_sum() {
        for (a, b, n) in [(0.5, 10.0, 1), (0.1, 40.0, 2), (2.0, 5.0, 3), (0.02, 300.0, 2)] {
            let mut s = 0.0;
            let r = 200u32;
            match n {
                1 => {
                    for x in 1..r {
                        let q = f64::from(x * x);
                        if q >= b {
                            s += (-a * q).exp();
                        }
                    }
                }
                2 => {
                    for x in 1..r {
                        for y in 1..r {
                            let q = f64::from(x * x + y * y);
                            if q >= b {
                                s += (-a * q).exp();
                            }
                        }
                    }
                }
                _ => {
                    for x in 1..40u32 {
                        for y in 1..40u32 {
                            for z in 1..40u32 {
                                let q = f64::from(x * x + y * y + z * z);
                                if q >= b {
                                    s += (-a * q).exp();
                                }
                            }
                        }
                    }
                }
            }
            let bound = ln_lattice_tail(a, b, n).exp();
            assert!(bound >= s, "a={a} b={b}: {bound} < {s}");
            assert!(bound < 1e3 * s.max(1e-300), "bound too loose: {bound} vs {s}");
        }
    }

    #[test]
    fn snapping_makes_mirrors_exact() {
        for ell in [0.3, 0.7, 0.1, 0.37, 0.5] {
            let s = snap_position(ell);
            assert_eq!(snap_position(1.0 - ell), 1.0 - s);
            assert_eq!(1.0 - (1.0 - s), s);
            assert!((s - ell).abs() < 1e-12);
        }
    }

    #[test]
    fn chamber_validation() {
        let c = ChamberSpec::open(2, Coupling::Finite(1.0), 1.0);
        assert!(c.validate().is_ok());
        assert!(c.with_sector(1).validate().is_err());
        assert!(ChamberSpec::split(2, 1.0, Coupling::Finite(1.0), 1.0).validate().is_err());
        assert!(ChamberSpec::split(2, 0.5, Coupling::Finite(1.0), 1.0).with_sector(3).validate().is_err());
        assert!(ChamberSpec::open(0, Coupling::Tonks, 1.0).validate().is_err());
    }
}
