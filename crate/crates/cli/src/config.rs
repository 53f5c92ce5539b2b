use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use szilard_core::bethe::SolverConfig;
use szilard_core::engine::{Mode, OptimizerGrids, Setting};
use szilard_core::statmech::TruncationConfig;
use szilard_core::units::{delta_eps, EPS1};
use szilard_core::Coupling;
use toml::{Table, Value};

use crate::error::{CliError, Result};

/// Largest `N` accepted without `allow_large_N`.
pub const DESK_MAX_N: usize = 6;
/// Largest `N` accepted without the flag once a temperature reaches
/// [`HIGH_T_EPS1`].
pub const HIGH_T_MAX_N: usize = 4;
/// Temperatures at or above this many `ε₁` count as high.
pub const HIGH_T_EPS1: f64 = 10.0;

/// Named sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Driven,
    Assisted,
    Fig2MaxRatioVsN,
    Fig3WVsT,
    Fig4AssistedRatioVsT,
    Fig5Eq8Curve,
    Fig6ReversibilityMap,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Driven,
        Scenario::Assisted,
        Scenario::Fig2MaxRatioVsN,
        Scenario::Fig3WVsT,
        Scenario::Fig4AssistedRatioVsT,
        Scenario::Fig5Eq8Curve,
        Scenario::Fig6ReversibilityMap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Driven => "driven",
            Scenario::Assisted => "assisted",
            Scenario::Fig2MaxRatioVsN => "fig2_maxratio_vs_N",
            Scenario::Fig3WVsT => "fig3_W_vs_T",
            Scenario::Fig4AssistedRatioVsT => "fig4_assisted_ratio_vs_T",
            Scenario::Fig5Eq8Curve => "fig5_eq8_curve",
            Scenario::Fig6ReversibilityMap => "fig6_reversibility_map",
        }
    }

    /// Feedback mode the scenario is defined for; `None` if it runs no cycle.
    pub fn fixed_mode(self) -> Option<Mode> {
        match self {
            Scenario::Driven | Scenario::Fig2MaxRatioVsN | Scenario::Fig3WVsT | Scenario::Fig5Eq8Curve => Some(Mode::Driven),
            Scenario::Assisted | Scenario::Fig4AssistedRatioVsT => Some(Mode::Assisted),
            Scenario::Fig6ReversibilityMap => None,
        }
    }

    /// Desk-scale configuration shipped with the binary.
    pub fn preset(self) -> &'static str {
        match self {
            Scenario::Driven => include_str!("../presets/driven.toml"),
            Scenario::Assisted => include_str!("../presets/assisted.toml"),
            Scenario::Fig2MaxRatioVsN => include_str!("../presets/fig2_maxratio_vs_N.toml"),
            Scenario::Fig3WVsT => include_str!("../presets/fig3_W_vs_T.toml"),
            Scenario::Fig4AssistedRatioVsT => include_str!("../presets/fig4_assisted_ratio_vs_T.toml"),
            Scenario::Fig5Eq8Curve => include_str!("../presets/fig5_eq8_curve.toml"),
            Scenario::Fig6ReversibilityMap => include_str!("../presets/fig6_reversibility_map.toml"),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Scenario::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Scenario::ALL.iter().map(|x| x.name()).collect();
            format!("unknown scenario {s:?} (expected one of {})", names.join(", "))
        })
    }
}

/// Unit of the configured temperature grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemperatureScale {
    /// `k_BT` in units of `ε₁`.
    Eps1,
    /// `k_BT` in units of `Δε_N`, so the grid shifts with `N`.
    DeltaN,
}

impl TemperatureScale {
    pub fn name(self) -> &'static str {
        match self {
            TemperatureScale::Eps1 => "eps1",
            TemperatureScale::DeltaN => "dN",
        }
    }

    /// Energy unit for `N` particles.
    pub fn unit(self, n_particles: usize) -> f64 {
        match self {
            TemperatureScale::Eps1 => EPS1,
            TemperatureScale::DeltaN => delta_eps(n_particles),
        }
    }
}

impl FromStr for TemperatureScale {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "eps1" => Ok(TemperatureScale::Eps1),
            "dN" => Ok(TemperatureScale::DeltaN),
            _ => Err(format!("unknown temperature scale {s:?} (expected eps1 or dN)")),
        }
    }
}

/// Numerical tolerances handed to the solver and the truncation policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub solver: f64,
    pub max_iterations: usize,
    pub p_change: f64,
    pub tail: f64,
    pub initial_window: f64,
    pub raises: u32,
}

impl Default for Tolerances {
    fn default() -> Self {
        let s = SolverConfig::default();
        let t = TruncationConfig::default();
        Self {
            solver: s.tolerance,
            max_iterations: s.max_iterations,
            p_change: t.p_tolerance,
            tail: t.tail_tolerance,
            initial_window: t.initial_window,
            raises: t.raises,
        }
    }
}

impl Tolerances {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig { tolerance: self.solver, max_iterations: self.max_iterations, ..SolverConfig::default() }
    }

    pub fn truncation(&self) -> TruncationConfig {
        TruncationConfig {
            initial_window: self.initial_window,
            raises: self.raises,
            p_tolerance: self.p_change,
            tail_tolerance: self.tail,
        }
    }
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub n_particles: Vec<usize>,
    /// Temperatures in units of `scale`.
    pub kt: Vec<f64>,
    pub scale: TemperatureScale,
    pub g_ins: Vec<Coupling>,
    pub mode: Mode,
    pub grids: OptimizerGrids,
    pub tolerances: Tolerances,
    pub output: PathBuf,
    /// Worker threads; 0 picks the number of cores.
    pub threads: usize,
    pub seed: u64,
    pub allow_large_n: bool,
    /// Points on the `p₀ ∈ [0, 1/2]` axis of the two/three-boson work curve.
    pub p0_points: usize,
    /// Removal positions of the reversibility map.
    pub ell: Vec<f64>,
    /// Temperature of the fixed-`T` reversibility lines, in units of `scale`.
    pub line_kt: f64,
    /// Removal couplings of the fixed-`T` reversibility lines.
    pub line_g: Vec<Coupling>,
}

impl RunConfig {
    /// Absolute temperature of grid entry `kt` for `N` particles.
    pub fn absolute_kt(&self, n_particles: usize, kt: f64) -> f64 {
        kt * self.scale.unit(n_particles)
    }

    /// Non-fatal notes about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        self.n_particles
            .iter()
            .filter(|&&n| n > DESK_MAX_N)
            .map(|n| format!("N = {n} is beyond desk scale; expect long run times"))
            .collect()
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new();
        t.insert("scenario".into(), self.scenario.name().into());
        t.insert("N".into(), Value::Array(self.n_particles.iter().map(|&n| Value::Integer(n as i64)).collect()));
        t.insert("kT".into(), floats(&self.kt));
        t.insert("scale".into(), self.scale.name().into());
        t.insert("g_ins".into(), couplings(&self.g_ins));
        t.insert("mode".into(), self.mode.to_string().into());
        t.insert("output".into(), self.output.to_string_lossy().into_owned().into());
        t.insert("threads".into(), Value::Integer(self.threads as i64));
        t.insert("seed".into(), Value::Integer(self.seed as i64));
        t.insert("allow_large_N".into(), self.allow_large_n.into());
        t.insert("p0_points".into(), Value::Integer(self.p0_points as i64));
        t.insert("ell".into(), floats(&self.ell));
        t.insert("line_kT".into(), self.line_kt.into());
        t.insert("line_g".into(), couplings(&self.line_g));
        let mut grids = Table::new();
        grids.insert("couplings".into(), couplings(&self.grids.couplings));
        grids.insert("positions".into(), floats(&self.grids.positions));
        t.insert("grids".into(), Value::Table(grids));
        let tol = &self.tolerances;
        let mut tolerances = Table::new();
        tolerances.insert("solver".into(), tol.solver.into());
        tolerances.insert("max_iterations".into(), Value::Integer(tol.max_iterations as i64));
        tolerances.insert("p_change".into(), tol.p_change.into());
        tolerances.insert("tail".into(), tol.tail.into());
        tolerances.insert("initial_window".into(), tol.initial_window.into());
        tolerances.insert("raises".into(), Value::Integer(i64::from(tol.raises)));
        t.insert("tolerances".into(), Value::Table(tolerances));
        t
    }

    /// Normalized TOML with every default spelled out; parses back to `self`.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_table()).expect("config tables always serialize")
    }

    /// SHA-256 of the normalized configuration without the keys that only
    /// place the run (`output`, `threads`).
    pub fn config_hash(&self) -> String {
        let mut t = self.to_table();
        t.remove("output");
        t.remove("threads");
        let text = toml::to_string(&t).expect("config tables always serialize");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn floats(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| Value::Float(x)).collect())
}

fn couplings(cs: &[Coupling]) -> Value {
    Value::Array(
        cs.iter()
            .map(|c| match c {
                Coupling::Finite(g) => Value::Float(*g),
                Coupling::Tonks => Value::String("inf".into()),
            })
            .collect(),
    )
}

fn number(v: &Value) -> std::result::Result<f64, String> {
    match v {
        Value::Integer(i) => Ok(*i as f64),
        Value::Float(x) => Ok(*x),
        other => Err(format!("expected a number, got {}", other.type_str())),
    }
}

fn count(v: &Value) -> std::result::Result<usize, String> {
    match v {
        Value::Integer(i) if *i >= 0 => usize::try_from(*i).map_err(|_| format!("{i} is too large")),
        Value::Integer(i) => Err(format!("expected a non-negative integer, got {i}")),
        other => Err(format!("expected an integer, got {}", other.type_str())),
    }
}

fn coupling(v: &Value) -> std::result::Result<Coupling, String> {
    match v {
        Value::String(s) => s.parse::<Coupling>().map_err(|e| e.to_string()),
        _ => {
            let g = number(v)?;
            if g.is_nan() || g == f64::NEG_INFINITY {
                return Err(format!("coupling must be finite or +inf, got {g}"));
            }
            Ok(Coupling::from(g))
        }
    }
}

fn position(v: &Value) -> std::result::Result<f64, String> {
    let x = number(v)?;
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(format!("barrier position must lie in (0, 1), got {x}"))
    }
}

/// Pulls keys out of a table and records every problem instead of stopping
/// at the first.
struct Reader<'a> {
    table: Table,
    prefix: &'static str,
    errors: &'a mut Vec<String>,
}

impl<'a> Reader<'a> {
    fn error(&mut self, key: &str, msg: impl fmt::Display) {
        self.errors.push(format!("{}{key}: {msg}", self.prefix));
    }

    fn value<T>(&mut self, key: &str, f: impl Fn(&Value) -> std::result::Result<T, String>) -> Option<T> {
        let v = self.table.remove(key)?;
        match f(&v) {
            Ok(x) => Some(x),
            Err(e) => {
                self.error(key, e);
                None
            }
        }
    }

    fn list<T>(&mut self, key: &str, f: impl Fn(&Value) -> std::result::Result<T, String>) -> Option<Vec<T>> {
        self.list_or_empty(key, false, f)
    }

    fn list_or_empty<T>(
        &mut self,
        key: &str,
        allow_empty: bool,
        f: impl Fn(&Value) -> std::result::Result<T, String>,
    ) -> Option<Vec<T>> {
        let v = self.table.remove(key)?;
        let Value::Array(items) = v else {
            self.error(key, format!("expected an array, got {}", v.type_str()));
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        let mut ok = true;
        for (i, item) in items.iter().enumerate() {
            match f(item) {
                Ok(x) => out.push(x),
                Err(e) => {
                    self.errors.push(format!("{}{key}[{i}]: {e}", self.prefix));
                    ok = false;
                }
            }
        }
        if ok && out.is_empty() && !allow_empty {
            self.error(key, "must not be empty");
            return None;
        }
        ok.then_some(out)
    }

    fn string(&mut self, key: &str) -> Option<String> {
        self.value(key, |v| match v {
            Value::String(s) => Ok(s.clone()),
            other => Err(format!("expected a string, got {}", other.type_str())),
        })
    }

    fn table(&mut self, key: &str) -> Option<Table> {
        self.value(key, |v| match v {
            Value::Table(t) => Ok(t.clone()),
            other => Err(format!("expected a table, got {}", other.type_str())),
        })
    }

    fn finish(self) {
        for key in self.table.keys() {
            self.errors.push(format!("{}{key}: unknown key", self.prefix));
        }
    }
}

fn positive(x: f64) -> std::result::Result<f64, String> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("must be positive and finite, got {x}"))
    }
}

/// Parse a removal setting written `ELL:G`, e.g. `0.5:inf` or `0.3:-1.5`.
pub fn parse_setting(s: &str) -> std::result::Result<Setting, String> {
    let (ell, g) = s.split_once(':').ok_or_else(|| format!("expected ELL:G, got {s:?}"))?;
    let ell: f64 = ell.trim().parse().map_err(|_| format!("not a barrier position: {ell:?}"))?;
    if !(ell > 0.0 && ell < 1.0) {
        return Err(format!("barrier position must lie in (0, 1), got {ell}"));
    }
    let g: Coupling = g.parse().map_err(|e: szilard_core::Error| e.to_string())?;
    Ok(Setting::new(ell, g))
}

/// Parse and validate a run configuration.
///
/// On failure the error lists every problem found, not just the first.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let table: Table = toml::from_str(text).map_err(|e| CliError::Config(vec![e.message().to_string()]))?;
    let mut errors = Vec::new();
    let mut r = Reader { table, prefix: "", errors: &mut errors };

    let scenario = match r.string("scenario") {
        Some(s) => s.parse::<Scenario>().map_err(|e| r.error("scenario", e)).ok(),
        None => {
            if !r.errors.iter().any(|e| e.starts_with("scenario:")) {
                r.errors.push("missing scenario".into());
            }
            None
        }
    };
    let curve_only = scenario == Some(Scenario::Fig5Eq8Curve);

    // the curve-only scenario writes its unused grids as empty lists
    let n_particles = r.list_or_empty("N", curve_only, |v| {
        let n = count(v)?;
        if n == 0 {
            Err("particle number must be at least 1".into())
        } else {
            Ok(n)
        }
    });
    let kt = r.list_or_empty("kT", curve_only, |v| {
        let t = number(v)?;
        if t > 0.0 && t.is_finite() {
            Ok(t)
        } else {
            Err(format!("temperature must be positive, got {t}"))
        }
    });
    let scale = r.value("scale", |v| match v {
        Value::String(s) => s.parse::<TemperatureScale>(),
        other => Err(format!("expected a string, got {}", other.type_str())),
    });
    let g_ins = r.list("g_ins", coupling).unwrap_or_else(|| vec![Coupling::Finite(0.0)]);
    let mode = r.value("mode", |v| match v {
        Value::String(s) => s.parse::<Mode>().map_err(|e| e.to_string()),
        other => Err(format!("expected a string, got {}", other.type_str())),
    });
    let output = r.string("output");
    let threads = r.value("threads", count).unwrap_or(0);
    let seed = r.value("seed", count).unwrap_or(0) as u64;
    let allow_large_n = r
        .value("allow_large_N", |v| v.as_bool().ok_or_else(|| format!("expected a boolean, got {}", v.type_str())))
        .unwrap_or(false);
    let p0_points = r
        .value("p0_points", |v| {
            let n = count(v)?;
            if n < 2 {
                Err(format!("need at least 2 points, got {n}"))
            } else {
                Ok(n)
            }
        })
        .unwrap_or(101);
    let ell = r.list("ell", position).unwrap_or_else(|| (1..50).map(|i| f64::from(i) / 50.0).collect());
    let line_kt = r.value("line_kT", |v| number(v).and_then(positive)).unwrap_or(1.0);
    let line_g = r.list("line_g", coupling).unwrap_or_else(|| {
        vec![Coupling::Finite(0.0), Coupling::Finite(1.0), Coupling::Finite(5.0), Coupling::Finite(20.0), Coupling::Tonks]
    });
    let grids_table = r.table("grids");
    let tol_table = r.table("tolerances");
    r.finish();

    let mode = match (scenario.and_then(Scenario::fixed_mode), mode) {
        (Some(fixed), Some(m)) if fixed != m => {
            errors.push(format!("mode: scenario {} runs in {fixed} mode, got {m}", scenario.expect("fixed mode")));
            fixed
        }
        (Some(fixed), _) => fixed,
        (None, m) => m.unwrap_or(Mode::Assisted),
    };

    let mut grids = OptimizerGrids::default_for(mode);
    if let Some(t) = grids_table {
        let mut g = Reader { table: t, prefix: "grids.", errors: &mut errors };
        if let Some(c) = g.list("couplings", coupling) {
            grids.couplings = c;
        }
        if let Some(p) = g.list("positions", position) {
            grids.positions = p;
        }
        g.finish();
    }
    if mode == Mode::Driven && grids.positions.iter().any(|&x| x != 0.5) {
        errors.push("grids.positions: driven mode only removes the barrier at 0.5".into());
    }

    let mut tolerances = Tolerances::default();
    if let Some(t) = tol_table {
        let mut g = Reader { table: t, prefix: "tolerances.", errors: &mut errors };
        let small = |v: &Value| number(v).and_then(positive);
        if let Some(x) = g.value("solver", small) {
            tolerances.solver = x;
        }
        if let Some(x) = g.value("max_iterations", count) {
            tolerances.max_iterations = x;
        }
        if let Some(x) = g.value("p_change", small) {
            tolerances.p_change = x;
        }
        if let Some(x) = g.value("tail", small) {
            tolerances.tail = x;
        }
        if let Some(x) = g.value("initial_window", small) {
            tolerances.initial_window = x;
        }
        if let Some(x) = g.value("raises", |v| count(v).and_then(|n| u32::try_from(n).map_err(|e| e.to_string()))) {
            if x > 8 {
                g.error("raises", format!("at most 8 window doublings, got {x}"));
            } else {
                tolerances.raises = x;
            }
        }
        g.finish();
        if tolerances.max_iterations == 0 {
            errors.push("tolerances.max_iterations: must be at least 1".into());
        }
    }

    let n_particles = match n_particles {
        Some(ns) => ns,
        None if curve_only => Vec::new(),
        None => {
            if !errors.iter().any(|e| e.starts_with("N")) {
                errors.push("N: missing particle numbers".into());
            }
            Vec::new()
        }
    };
    let kt = match kt {
        Some(ts) => ts,
        None if curve_only => Vec::new(),
        None => {
            if !errors.iter().any(|e| e.starts_with("kT")) {
                errors.push("kT: missing temperature grid".into());
            }
            Vec::new()
        }
    };
    if kt.windows(2).any(|w| w[1] <= w[0]) {
        errors.push("kT: temperatures must be strictly ascending".into());
    }
    let mut seen = std::collections::BTreeSet::new();
    for &n in &n_particles {
        if !seen.insert(n) {
            errors.push(format!("N: duplicate entry {n}"));
        }
    }
    let scale = scale.unwrap_or(TemperatureScale::Eps1);
    if !allow_large_n {
        for &n in &n_particles {
            if n > DESK_MAX_N {
                errors.push(format!("N: {n} exceeds the desk-scale limit of {DESK_MAX_N} (set allow_large_N = true)"));
            } else if n > HIGH_T_MAX_N && kt.iter().any(|&t| t * scale.unit(n) >= HIGH_T_EPS1 * EPS1) {
                errors.push(format!(
                    "N: {n} exceeds the limit of {HIGH_T_MAX_N} for temperatures of {HIGH_T_EPS1} eps1 and above (set allow_large_N = true)"
                ));
            }
        }
    }
    if curve_only && n_particles.iter().any(|&n| n != 2 && n != 3) {
        errors.push("N: the two/three-boson work curve only holds for N = 2 and N = 3".into());
    }
    if kt.is_empty() != n_particles.is_empty() && curve_only {
        errors.push("N, kT: engine points need both particle numbers and temperatures".into());
    }

    match scenario {
        Some(scenario) if errors.is_empty() => Ok(RunConfig {
            scenario,
            n_particles,
            kt,
            scale,
            g_ins,
            mode,
            grids,
            tolerances,
            output: output.map_or_else(|| PathBuf::from("out").join(scenario.name()), PathBuf::from),
            threads,
            seed,
            allow_large_n,
            p0_points,
            ell,
            line_kt,
            line_g,
        }),
        _ => Err(CliError::Config(errors)),
    }
}
