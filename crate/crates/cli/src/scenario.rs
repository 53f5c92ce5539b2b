use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use szilard_core::engine::{n23_curve, optimize_protocol, write_work_csv, ProtocolOptimum, WorkReport};
use szilard_core::statmech::ThermalContext;
use szilard_core::units::{delta_eps, EPS1};
use szilard_core::Coupling;

use crate::config::{RunConfig, Scenario};
use crate::error::{CliError, Result};

/// A sweep point that produced no row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub point: String,
    pub error: String,
}

/// Optimizer grid points that could not be evaluated at a sweep point. The
/// row exists; the search simply skipped those settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedGrid {
    pub point: String,
    pub count: usize,
}

/// File contents of a scenario, before anything touches the disk.
#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    /// `(file name, contents)` in a fixed order.
    pub files: Vec<(String, String)>,
    pub reports: Vec<WorkReport>,
    pub failures: Vec<Failure>,
    pub skipped: Vec<SkippedGrid>,
    pub max_truncation_bound: f64,
}

/// Rows of a finished run plus provenance.
#[derive(Debug, Clone)]
pub struct ResultSet {
    pub scenario: Scenario,
    pub config_hash: String,
    pub version: String,
    pub reports: Vec<WorkReport>,
    pub failures: Vec<Failure>,
    /// Paths written, manifest last.
    pub files: Vec<PathBuf>,
    pub max_truncation_bound: f64,
}

impl ResultSet {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Serialize)]
struct ManifestTolerances {
    solver: f64,
    max_iterations: usize,
    p_change: f64,
    tail: f64,
    initial_window: f64,
    raises: u32,
    achieved_truncation_bound: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config_hash: &'a str,
    version: &'a str,
    scenario: &'a str,
    failures: &'a [Failure],
    tolerances: ManifestTolerances,
    skipped_grid_points: &'a [SkippedGrid],
    warnings: Vec<String>,
    files: Vec<&'a str>,
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Run the configured sweep and write its CSV files and `manifest.json`
/// into `config.output`.
///
/// Points that fail are listed in the manifest and do not stop the sweep.
pub fn run_scenario(config: &RunConfig) -> Result<ResultSet> {
    let out = compute(config)?;
    fs::create_dir_all(&config.output).map_err(CliError::io(&config.output))?;
    let mut files = Vec::with_capacity(out.files.len() + 1);
    for (name, contents) in &out.files {
        let path = config.output.join(name);
        fs::write(&path, contents).map_err(CliError::io(&path))?;
        files.push(path);
    }
    let hash = config.config_hash();
    let manifest = manifest_json(config, &hash, &out);
    let path = config.output.join("manifest.json");
    fs::write(&path, manifest).map_err(CliError::io(&path))?;
    files.push(path);
    Ok(ResultSet {
        scenario: config.scenario,
        config_hash: hash,
        version: VERSION.to_string(),
        reports: out.reports,
        failures: out.failures,
        files,
        max_truncation_bound: out.max_truncation_bound,
    })
}

pub(crate) fn manifest_json(config: &RunConfig, hash: &str, out: &ScenarioOutput) -> String {
    let t = &config.tolerances;
    let manifest = Manifest {
        config_hash: hash,
        version: VERSION,
        scenario: config.scenario.name(),
        failures: &out.failures,
        tolerances: ManifestTolerances {
            solver: t.solver,
            max_iterations: t.max_iterations,
            p_change: t.p_change,
            tail: t.tail,
            initial_window: t.initial_window,
            raises: t.raises,
            achieved_truncation_bound: out.max_truncation_bound,
        },
        skipped_grid_points: &out.skipped,
        warnings: config.warnings(),
        files: out.files.iter().map(|(n, _)| n.as_str()).collect(),
    };
    let mut s = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    s.push('\n');
    s
}

/// Evaluate a scenario on a dedicated worker pool without writing anything.
pub fn compute(config: &RunConfig) -> Result<ScenarioOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| CliError::ThreadPool(e.to_string()))?;
    let ctx = ThermalContext::new(config.tolerances.solver_config(), config.tolerances.truncation());
    Ok(pool.install(|| match config.scenario {
        Scenario::Driven | Scenario::Assisted | Scenario::Fig3WVsT | Scenario::Fig4AssistedRatioVsT => {
            let (reports, failures, skipped) = engine_sweep(&ctx, config);
            let files = vec![("work.csv".to_string(), work_csv(&reports))];
            finish(files, reports, failures, skipped, 0.0)
        }
        Scenario::Fig2MaxRatioVsN => {
            let (reports, failures, skipped) = engine_sweep(&ctx, config);
            let files = vec![
                ("work.csv".to_string(), work_csv(&reports)),
                ("maxratio.csv".to_string(), max_ratio_csv(config, &reports)),
                ("losses.csv".to_string(), losses_csv(&reports)),
            ];
            finish(files, reports, failures, skipped, 0.0)
        }
        Scenario::Fig5Eq8Curve => {
            let (reports, failures, skipped) = engine_sweep(&ctx, config);
            let mut files = vec![("curve.csv".to_string(), n23_curve_csv(config.p0_points))];
            if !config.n_particles.is_empty() {
                files.push(("points.csv".to_string(), n23_points_csv(&reports)));
                files.push(("work.csv".to_string(), work_csv(&reports)));
            }
            finish(files, reports, failures, skipped, 0.0)
        }
        Scenario::Fig6ReversibilityMap => reversibility(&ctx, config),
    }))
}

fn finish(
    files: Vec<(String, String)>,
    reports: Vec<WorkReport>,
    failures: Vec<Failure>,
    skipped: Vec<SkippedGrid>,
    bound: f64,
) -> ScenarioOutput {
    let max_truncation_bound = reports.iter().map(|r| r.truncation_bound).fold(bound, f64::max);
    ScenarioOutput { files, reports, failures, skipped, max_truncation_bound }
}

fn fmt_kt(config: &RunConfig, kt: f64) -> String {
    format!("kT={kt} ({})", config.scale.name())
}

/// Optimized cycles at every `(N, g^ins, kT)` of the configuration, in that
/// nesting order.
fn engine_sweep(ctx: &ThermalContext, config: &RunConfig) -> (Vec<WorkReport>, Vec<Failure>, Vec<SkippedGrid>) {
    let mode = config.scenario.fixed_mode().unwrap_or(config.mode);
    let points: Vec<(usize, Coupling, f64)> = config
        .n_particles
        .iter()
        .flat_map(|&n| config.g_ins.iter().flat_map(move |&g| config.kt.iter().map(move |&t| (n, g, t))))
        .collect();
    let results: Vec<szilard_core::Result<ProtocolOptimum>> = points
        .par_iter()
        .map(|&(n, g, t)| optimize_protocol(ctx, n, config.absolute_kt(n, t), mode, g, &config.grids))
        .collect();
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    let mut skipped = Vec::new();
    for ((n, g, t), r) in points.into_iter().zip(results) {
        let point = format!("N={n} g_ins={g} {}", fmt_kt(config, t));
        match r {
            Ok(o) => {
                let count = o.branches.first().map_or(0, |b| b.failed_points);
                if count > 0 {
                    skipped.push(SkippedGrid { point, count });
                }
                reports.push(o.report);
            }
            Err(e) => failures.push(Failure { point, error: e.to_string() }),
        }
    }
    (reports, failures, skipped)
}

fn work_csv(reports: &[WorkReport]) -> String {
    let mut buf = Vec::new();
    write_work_csv(&mut buf, reports).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

fn max_ratio_csv(config: &RunConfig, reports: &[WorkReport]) -> String {
    let mut s = String::from("N,g_ins,max_W_over_ln2,kT,kT_over_dN,W,I,trunc_bound\n");
    for &n in &config.n_particles {
        for &g in &config.g_ins {
            let best = reports
                .iter()
                .filter(|r| r.n_particles() == n && r.g_ins() == g)
                .max_by(|a, b| a.ratio_ln2.total_cmp(&b.ratio_ln2).then(b.kt.total_cmp(&a.kt)));
            if let Some(r) = best {
                writeln!(
                    s,
                    "{n},{g},{},{},{},{},{},{:e}",
                    r.ratio_ln2,
                    r.kt / EPS1,
                    r.kt / delta_eps(n),
                    r.work / EPS1,
                    r.information,
                    r.truncation_bound
                )
                .expect("writing to a string");
            }
        }
    }
    s
}

fn losses_csv(reports: &[WorkReport]) -> String {
    let mut s = String::from("N,g_ins,kT,kT_over_dN,n,p_rem,loss\n");
    for r in reports {
        let n_total = r.n_particles();
        for (n, &p) in r.p_rem.iter().enumerate() {
            writeln!(s, "{n_total},{},{},{},{n},{p},{}", r.g_ins(), r.kt / EPS1, r.kt / delta_eps(n_total), -p.ln())
                .expect("writing to a string");
        }
    }
    s
}

fn n23_curve_csv(points: usize) -> String {
    let mut s = String::from("p0,W_over_kT,W_over_kTln2\n");
    for i in 0..points {
        let p0 = 0.5 * i as f64 / (points - 1) as f64;
        let w = n23_curve(p0, 1.0).expect("p0 lies in [0, 1/2]");
        writeln!(s, "{p0},{w},{}", w / std::f64::consts::LN_2).expect("writing to a string");
    }
    s
}

fn n23_points_csv(reports: &[WorkReport]) -> String {
    let mut s = String::from("N,g_ins,kT,kT_over_dN,p0,W_over_kT,curve_W_over_kT,trunc_bound\n");
    for r in reports {
        let n = r.n_particles();
        let p0 = r.p_ins[0];
        let curve = n23_curve(p0.min(0.5), 1.0).expect("p0 clamped into [0, 1/2]");
        writeln!(
            s,
            "{n},{},{},{},{p0},{},{curve},{:e}",
            r.g_ins(),
            r.kt / EPS1,
            r.kt / delta_eps(n),
            r.work / r.kt,
            r.truncation_bound
        )
        .expect("writing to a string");
    }
    s
}

/// `p₁` over removal position: a TG map over the temperature grid and lines
/// at `line_kT` for each coupling in `line_g`.
fn reversibility(ctx: &ThermalContext, config: &RunConfig) -> ScenarioOutput {
    struct Point {
        n: usize,
        ell: f64,
        coupling: Coupling,
        kt: f64,
        label: &'static str,
    }
    let mut points = Vec::new();
    for &n in &config.n_particles {
        for &t in &config.kt {
            for &ell in &config.ell {
                points.push(Point { n, ell, coupling: Coupling::Tonks, kt: config.absolute_kt(n, t), label: "map" });
            }
        }
    }
    for &n in &config.n_particles {
        for &g in &config.line_g {
            for &ell in &config.ell {
                points.push(Point { n, ell, coupling: g, kt: config.absolute_kt(n, config.line_kt), label: "line" });
            }
        }
    }
    let results: Vec<szilard_core::Result<(f64, f64)>> = points
        .par_iter()
        .map(|p| ctx.probabilities(p.n, p.ell, p.coupling, p.kt).map(|t| (t.p[1], t.truncation_error_bound)))
        .collect();

    let mut map = String::from("N,ell,kT,kT_over_dN,p1,trunc_bound\n");
    let mut lines = String::from("N,g,ell,kT,kT_over_dN,p1,trunc_bound\n");
    let mut failures = Vec::new();
    let mut bound = 0.0f64;
    for (p, r) in points.iter().zip(results) {
        let kt = p.kt / EPS1;
        let kt_dn = p.kt / delta_eps(p.n);
        match r {
            Ok((p1, b)) => {
                bound = bound.max(b);
                let written = if p.label == "map" {
                    writeln!(map, "{},{},{kt},{kt_dn},{p1},{b:e}", p.n, p.ell)
                } else {
                    writeln!(lines, "{},{},{},{kt},{kt_dn},{p1},{b:e}", p.n, p.coupling, p.ell)
                };
                written.expect("writing to a string");
            }
            Err(e) => failures.push(Failure {
                point: format!("{} N={} g={} ell={} kT={kt} (eps1)", p.label, p.n, p.coupling, p.ell),
                error: e.to_string(),
            }),
        }
    }
    let files = vec![("map.csv".to_string(), map), ("lines.csv".to_string(), lines)];
    finish(files, Vec::new(), failures, Vec::new(), bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use szilard_core::engine::Mode;

    #[test]
    fn curve_endpoints() {
        let s = n23_curve_csv(3);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "p0,W_over_kT,W_over_kTln2");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,"));
        assert!(lines[2].starts_with("0.25,"));
        assert!(lines[3].starts_with("0.5,"));
    }

    #[test]
    fn driven_mode_is_fixed() {
        assert_eq!(Scenario::Fig3WVsT.fixed_mode(), Some(Mode::Driven));
    }
}
