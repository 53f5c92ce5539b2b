use rayon::prelude::*;

use super::protocol::{Mode, Protocol, Setting};
use super::work::{cycle_work, WorkReport};
use crate::error::{Error, Result};
use crate::numeric::golden_max;
use crate::statmech::ThermalContext;
use crate::units::Coupling;

/// Grid values closer than this count as tied.
const TIE: f64 = 1e-12;

/// Search grids for removal settings.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerGrids {
    pub couplings: Vec<Coupling>,
    pub positions: Vec<f64>,
}

impl OptimizerGrids {
    /// Couplings `{−10, −5, −2, −1, −0.5, 0, 0.5, 1, 2, 5, 10, 10², 10³, 10⁴, ∞}`;
    /// positions `i/100` for assisted mode and `{1/2}` for driven mode.
    pub fn default_for(mode: Mode) -> Self {
        let mut couplings: Vec<Coupling> = [-10.0, -5.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 1e2, 1e3, 1e4]
            .into_iter()
            .map(Coupling::Finite)
            .collect();
        couplings.push(Coupling::Tonks);
        let positions = match mode {
            Mode::Driven => vec![0.5],
            Mode::Assisted => (1..100).map(|i| f64::from(i) / 100.0).collect(),
        };
        Self { couplings, positions }
    }

    fn validate(&self, mode: Mode) -> Result<()> {
        if self.couplings.is_empty() || self.positions.is_empty() {
            return Err(Error::InvalidArgument("optimizer grids must be non-empty".into()));
        }
        if mode == Mode::Driven && self.positions.iter().any(|&x| x != 0.5) {
            return Err(Error::InvalidArgument("driven mode only removes the barrier at 1/2".into()));
        }
        if self.positions.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::InvalidArgument("grid positions must lie in (0, 1)".into()));
        }
        if self.couplings.iter().any(|c| c.as_f64().is_nan() || c.as_f64() == f64::NEG_INFINITY) {
            return Err(Error::InvalidArgument("grid couplings must be finite or +inf".into()));
        }
        Ok(())
    }

    fn sorted(&self) -> Self {
        let mut couplings = self.couplings.clone();
        couplings.sort_by(|a, b| a.as_f64().total_cmp(&b.as_f64()));
        couplings.dedup();
        let mut positions = self.positions.clone();
        positions.sort_by(f64::total_cmp);
        positions.dedup();
        Self { couplings, positions }
    }
}

/// `p_n(ℓ, g)` for every `n` on a grid of removal settings.
#[derive(Debug, Clone)]
pub struct ProbabilityGrid {
    pub n_particles: usize,
    pub kt: f64,
    pub grids: OptimizerGrids,
    /// Row-major over `(position, coupling)`; `Err` marks a failed point.
    pub cells: Vec<std::result::Result<Vec<f64>, Error>>,
}

impl ProbabilityGrid {
    pub fn compute(ctx: &ThermalContext, n_particles: usize, kt: f64, grids: &OptimizerGrids) -> Self {
        let grids = grids.sorted();
        let points: Vec<(f64, Coupling)> = grids
            .positions
            .iter()
            .flat_map(|&ell| grids.couplings.iter().map(move |&c| (ell, c)))
            .collect();
        // a removal coupling is only usable if the open box after removal is too
        let open: Vec<Result<()>> =
            grids.couplings.par_iter().map(|&c| ctx.full_box(n_particles, c, kt).map(|_| ())).collect();
        let cells = points
            .par_iter()
            .enumerate()
            .map(|(i, &(ell, c))| {
                open[i % grids.couplings.len()].clone()?;
                ctx.probabilities(n_particles, ell, c, kt).map(|t| t.p)
            })
            .collect();
        Self { n_particles, kt, grids, cells }
    }

    fn at(&self, i_ell: usize, i_g: usize) -> Option<&Vec<f64>> {
        self.cells[i_ell * self.grids.couplings.len() + i_g].as_ref().ok()
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.is_err()).count()
    }
}

/// Best removal setting for one measurement outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchOptimum {
    pub n: usize,
    pub setting: Setting,
    pub p: f64,
    /// The optimum sits at the most attractive grid coupling that converged,
    /// standing in for `g → −∞`.
    pub extrapolated: bool,
    pub failed_points: usize,
}

fn magnitude_order(a: Coupling, b: Coupling) -> std::cmp::Ordering {
    a.magnitude().total_cmp(&b.magnitude()).then(a.as_f64().total_cmp(&b.as_f64()))
}

/// Grid argmax of `p_n`, then golden-section polish in `g` and `ℓ`.
///
/// Ties go to the largest `|g|`, then to the midpoint of the contiguous run of
/// tied positions. A tied optimum is not polished.
pub fn best_on_grid(ctx: &ThermalContext, grid: &ProbabilityGrid, n: usize, mode: Mode) -> Result<BranchOptimum> {
    let g = &grid.grids;
    let (n_ell, n_g) = (g.positions.len(), g.couplings.len());
    let value = |i: usize, j: usize| grid.at(i, j).map(|p| p[n]);
    let best = (0..n_ell)
        .flat_map(|i| (0..n_g).filter_map(move |j| value(i, j)))
        .fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return Err(Error::OptimizationFailed(format!("every grid point failed for branch {n}")));
    }
    let tied = |i: usize, j: usize| value(i, j).is_some_and(|v| v >= best - TIE);
    let j_best = (0..n_g)
        .filter(|&j| (0..n_ell).any(|i| tied(i, j)))
        .max_by(|&a, &b| magnitude_order(g.couplings[a], g.couplings[b]))
        .expect("maximum exists");
    let i_peak = (0..n_ell)
        .filter(|&i| value(i, j_best).is_some())
        .max_by(|&a, &b| value(a, j_best).unwrap().total_cmp(&value(b, j_best).unwrap()).then(b.cmp(&a)))
        .expect("maximum exists");
    let (mut lo, mut hi) = (i_peak, i_peak);
    while lo > 0 && tied(lo - 1, j_best) {
        lo -= 1;
    }
    while hi + 1 < n_ell && tied(hi + 1, j_best) {
        hi += 1;
    }
    let g_tied = (0..n_g).filter(|&j| tied(i_peak, j)).count() > 1;
    let extrapolated = g.couplings[j_best].as_f64() < 0.0 && (0..j_best).all(|j| value(i_peak, j).is_none());
    let failed_points = grid.failures();

    let eval = |ell: f64, c: Coupling| ctx.probabilities(grid.n_particles, ell, c, grid.kt).ok().map(|t| t.p[n]);

    if lo != hi {
        let ell = 0.5 * (g.positions[lo] + g.positions[hi]);
        let coupling = g.couplings[j_best];
        let p = eval(ell, coupling).unwrap_or(best);
        return Ok(BranchOptimum { n, setting: Setting::new(ell, coupling), p, extrapolated, failed_points });
    }

    let mut ell = g.positions[i_peak];
    let mut coupling = g.couplings[j_best];
    let mut p = best;
    if !g_tied {
        if let Coupling::Finite(_) = coupling {
            let side = |j: usize| g.couplings.get(j).and_then(|c| c.finite()).filter(|_| value(i_peak, j).is_some());
            let left = j_best.checked_sub(1).and_then(side);
            let right = side(j_best + 1);
            if let (Some(a), Some(b)) = (left, right) {
                if let Some((x, v)) = golden_max(|x| eval(ell, Coupling::Finite(x)), a, b, 1e-9 * (1.0 + b.abs()), 200) {
                    if v > p {
                        coupling = Coupling::Finite(x);
                        p = v;
                    }
                }
            }
        }
    }
    if mode == Mode::Assisted && i_peak > 0 && i_peak + 1 < n_ell {
        let (a, b) = (g.positions[i_peak - 1], g.positions[i_peak + 1]);
        if let Some((x, v)) = golden_max(|x| eval(x, coupling), a, b, 1e-9, 200) {
            if v > p {
                ell = x;
                p = v;
            }
        }
    }
    Ok(BranchOptimum { n, setting: Setting::new(ell, coupling), p, extrapolated, failed_points })
}

/// Optimal removal setting for outcome `n`.
pub fn optimize_branch(
    ctx: &ThermalContext,
    n: usize,
    n_particles: usize,
    kt: f64,
    mode: Mode,
    grids: &OptimizerGrids,
) -> Result<BranchOptimum> {
    grids.validate(mode)?;
    if n > n_particles {
        return Err(Error::InvalidArgument(format!("branch {n} exceeds N = {n_particles}")));
    }
    let grid = ProbabilityGrid::compute(ctx, n_particles, kt, grids);
    best_on_grid(ctx, &grid, n, mode)
}

/// Optimized protocol, its work report and the per-branch search results.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOptimum {
    pub protocol: Protocol,
    pub report: WorkReport,
    pub branches: Vec<BranchOptimum>,
}

/// Optimize every branch on one shared probability grid, then evaluate the
/// cycle. The cycle work is a sum of per-outcome terms, each increasing in its own
/// `p_n^rem`, so branch-wise maxima give the maximal work for the insertion.
pub fn optimize_protocol(
    ctx: &ThermalContext,
    n_particles: usize,
    kt: f64,
    mode: Mode,
    g_ins: Coupling,
    grids: &OptimizerGrids,
) -> Result<ProtocolOptimum> {
    grids.validate(mode)?;
    let insertion = Setting::new(0.5, g_ins);
    let grid = ProbabilityGrid::compute(ctx, n_particles, kt, grids);
    let results: Vec<Result<BranchOptimum>> =
        (0..=n_particles).into_par_iter().map(|n| best_on_grid(ctx, &grid, n, mode)).collect();
    let mut branches = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    for (n, r) in results.into_iter().enumerate() {
        match r {
            Ok(b) => branches.push(b),
            Err(e) => failed.push(format!("branch {n}: {e}")),
        }
    }
    if !failed.is_empty() {
        return Err(Error::OptimizationFailed(failed.join("; ")));
    }
    let protocol = Protocol::new(n_particles, mode, insertion, branches.iter().map(|b| b.setting).collect())?;
    let report = cycle_work(ctx, &protocol, kt)?;
    Ok(ProtocolOptimum { protocol, report, branches })
}
