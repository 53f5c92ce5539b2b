use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use szilard_cli::{emit_goldens, parse_config, parse_setting, run_scenario, CliError, RunConfig, Scenario, TemperatureScale};
use szilard_core::bethe::{spectrum_for, write_spectrum_csv, SolverConfig};
use szilard_core::engine::{cycle_work, optimize_protocol, write_work_csv, Mode, OptimizerGrids, Protocol, Setting};
use szilard_core::statmech::{write_thermal_csv, ThermalContext};
use szilard_core::units::EPS1;
use szilard_core::Coupling;

/// Thermodynamics of the interacting-boson quantum Szilard engine.
#[derive(Parser)]
#[command(name = "szilard", version)]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bethe-ansatz spectrum of n bosons in a segment.
    Spectrum {
        #[arg(short, long)]
        n: usize,
        /// Segment length in units of L.
        #[arg(long, default_value_t = 1.0)]
        ell: f64,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        g: Coupling,
        /// Energy ceiling in units of eps1.
        #[arg(long)]
        emax: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sector partition functions and probabilities p_n for one barrier setting.
    Probs {
        #[arg(short = 'N', long = "particles")]
        n_particles: usize,
        #[arg(long, default_value_t = 0.5)]
        ell: f64,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        g: Coupling,
        #[arg(long, allow_hyphen_values = true)]
        kt: f64,
        /// Unit of --kt: eps1 or dN.
        #[arg(long, default_value = "eps1")]
        scale: TemperatureScale,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Work of one explicit protocol.
    Work {
        #[arg(short = 'N', long = "particles")]
        n_particles: usize,
        #[arg(long)]
        mode: Mode,
        #[arg(long, allow_hyphen_values = true)]
        kt: f64,
        #[arg(long, default_value = "eps1")]
        scale: TemperatureScale,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        g_ins: Coupling,
        /// Removal setting ELL:G for outcome n = 0, 1, ..., N (repeat N+1 times).
        #[arg(long = "branch", value_parser = parse_setting, allow_hyphen_values = true)]
        branches: Vec<Setting>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Work-maximizing protocol on the default optimizer grids.
    Optimize {
        #[arg(short = 'N', long = "particles")]
        n_particles: usize,
        #[arg(long)]
        mode: Mode,
        #[arg(long, allow_hyphen_values = true)]
        kt: f64,
        #[arg(long, default_value = "eps1")]
        scale: TemperatureScale,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        g_ins: Coupling,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario sweep and write its CSV files and manifest.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scenario name; alone it selects the built-in preset.
        #[arg(long)]
        scenario: Option<Scenario>,
        /// Output directory (overrides the configuration).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Store a scenario's CSV files as regression goldens.
    Goldens {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<Scenario>,
        /// Root of the golden tree.
        #[arg(long, default_value = "goldens")]
        out: PathBuf,
        /// Golden set name; defaults to the config file stem or scenario name.
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        overwrite_goldens: bool,
    },
}

enum Outcome {
    Complete,
    Partial,
}

type Fallible<T> = Result<T, CliError>;

fn sink(out: Option<&Path>) -> Fallible<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p).map_err(io_err(p))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn load_config(config: Option<&Path>, scenario: Option<Scenario>) -> Fallible<RunConfig> {
    let text = match (config, scenario) {
        (Some(path), None) => fs::read_to_string(path).map_err(io_err(path))?,
        (Some(path), Some(s)) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            let mut table: toml::Table =
                toml::from_str(&text).map_err(|e| CliError::Config(vec![e.message().to_string()]))?;
            table.insert("scenario".into(), s.name().into());
            toml::to_string(&table).expect("tables serialize")
        }
        (None, Some(s)) => s.preset().to_string(),
        (None, None) => return Err(CliError::Config(vec!["pass --config PATH or --scenario NAME".into()])),
    };
    parse_config(&text)
}

fn run(cli: Cli) -> Fallible<Outcome> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::ThreadPool(e.to_string()))?;
    }
    match cli.command {
        Command::Spectrum { n, ell, g, emax, out } => {
            let s = spectrum_for(n, ell, g, emax * EPS1, &SolverConfig::default())?;
            let mut w = sink(out.as_deref())?;
            write_spectrum_csv(&mut w, &[s]).and_then(|()| w.flush()).map_err(io_err(Path::new("<output>")))?;
        }
        Command::Probs { n_particles, ell, g, kt, scale, out } => {
            let t = ThermalContext::default().probabilities(n_particles, ell, g, kt * scale.unit(n_particles))?;
            let mut w = sink(out.as_deref())?;
            write_thermal_csv(&mut w, &[t]).and_then(|()| w.flush()).map_err(io_err(Path::new("<output>")))?;
        }
        Command::Work { n_particles, mode, kt, scale, g_ins, branches, out } => {
            let protocol = Protocol::new(n_particles, mode, Setting::new(0.5, g_ins), branches)?;
            let r = cycle_work(&ThermalContext::default(), &protocol, kt * scale.unit(n_particles))?;
            let mut w = sink(out.as_deref())?;
            write_work_csv(&mut w, &[r]).and_then(|()| w.flush()).map_err(io_err(Path::new("<output>")))?;
        }
        Command::Optimize { n_particles, mode, kt, scale, g_ins, out } => {
            let grids = OptimizerGrids::default_for(mode);
            let o = optimize_protocol(&ThermalContext::default(), n_particles, kt * scale.unit(n_particles), mode, g_ins, &grids)?;
            for b in &o.branches {
                eprintln!(
                    "n={}: ell={} g={} p={}{}",
                    b.n,
                    b.setting.ell,
                    b.setting.coupling,
                    b.p,
                    if b.extrapolated { " (most attractive converged coupling)" } else { "" }
                );
            }
            let mut w = sink(out.as_deref())?;
            write_work_csv(&mut w, &[o.report]).and_then(|()| w.flush()).map_err(io_err(Path::new("<output>")))?;
        }
        Command::Sweep { config, scenario, out } => {
            let mut cfg = load_config(config.as_deref(), scenario)?;
            if let Some(out) = out {
                cfg.output = out;
            }
            if let Some(k) = cli.threads {
                cfg.threads = k;
            }
            for w in cfg.warnings() {
                eprintln!("warning: {w}");
            }
            let rs = run_scenario(&cfg)?;
            eprintln!("{}: wrote {} files to {}", rs.scenario, rs.files.len(), cfg.output.display());
            for f in &rs.failures {
                eprintln!("failed: {}: {}", f.point, f.error);
            }
            if !rs.is_complete() {
                return Ok(Outcome::Partial);
            }
        }
        Command::Goldens { config, scenario, out, name, overwrite_goldens } => {
            let mut cfg = load_config(config.as_deref(), scenario)?;
            if let Some(k) = cli.threads {
                cfg.threads = k;
            }
            let name = name
                .or_else(|| config.as_deref().and_then(Path::file_stem).map(|s| s.to_string_lossy().into_owned()))
                .unwrap_or_else(|| cfg.scenario.name().to_string());
            let files = emit_goldens(&cfg, &out, &name, overwrite_goldens)?;
            for f in files {
                eprintln!("wrote {}", f.display());
            }
        }
    }
    Ok(Outcome::Complete)
}

fn main() -> ExitCode {
    // usage errors exit 1; 2 is reserved for runs with failed points
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(Outcome::Complete) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
