//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 invalid
//! configuration. Every run writes `manifest.json` and
//! `resolved_config.toml` into the output directory; passing either back
//! through `--config` repeats the run exactly.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::{NoisePreset, NoiseSection, RunConfig};
use crate::error::{config_error, Error, Result};
use crate::mc::{sweep, write_sweep_csv, SweepResult};
use crate::narma::run_narma_benchmark;
use crate::pipeline::{
    diagnostics, load_market_csv, run_forecast, write_forecast_csv, write_plot_csv,
};
use crate::sim_check::run_sim_check;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.toml";

#[derive(Debug, Parser)]
#[command(
    name = "nisq-reservoir",
    version,
    about = "Noisy quantum reservoir computer: memory-capacity sweeps, NARMA5 and volatility forecasting",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Memory capacity of every graph in the topology sequence.
    McSweep(Common),
    /// One-step NARMA5 forecasting benchmark.
    Narma {
        #[command(flatten)]
        common: Common,
        /// Sequence length.
        #[arg(long)]
        length: Option<usize>,
    },
    /// Next-day volatility-index forecast from a market CSV.
    Forecast {
        #[command(flatten)]
        common: Common,
        /// CSV with header date,spx,vix.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Summary statistics of a market CSV.
    Diagnostics {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Statistical self-test of the simulated quantum layer.
    SimCheck(Common),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::McSweep(_) => "mc-sweep",
            Command::Narma { .. } => "narma",
            Command::Forecast { .. } => "forecast",
            Command::Diagnostics { .. } => "diagnostics",
            Command::SimCheck(_) => "sim-check",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::McSweep(c) | Command::SimCheck(c) => c,
            Command::Narma { common, .. }
            | Command::Forecast { common, .. }
            | Command::Diagnostics { common, .. } => common,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PresetArg {
    None,
    RochesterLike,
}

impl From<PresetArg> for NoisePreset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::None => NoisePreset::None,
            PresetArg::RochesterLike => NoisePreset::RochesterLike,
        }
    }
}

#[derive(Debug, Args)]
struct Common {
    /// TOML config, or a manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of qubits.
    #[arg(long)]
    qubits: Option<usize>,
    /// Repetitions for mc-sweep and sim-check.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    shots: Option<u64>,
    /// Replaces the whole noise section with a preset.
    #[arg(long, value_enum)]
    noise_preset: Option<PresetArg>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
}

/// Provenance record written next to every set of outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref())?;
        serde_json::from_str(&text).map_err(|e| config_error("<manifest>", e.to_string()))
    }
}

fn base_config(command: &str, path: Option<&Path>) -> Result<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        let manifest = Manifest::load(path)?;
        if manifest.command != command {
            return Err(config_error(
                "command",
                format!(
                    "manifest was written by `{}`, not `{command}`",
                    manifest.command
                ),
            ));
        }
        Ok(manifest.config)
    } else {
        RunConfig::load(path)
    }
}

fn resolve_config(cmd: &Command) -> Result<RunConfig> {
    let common = cmd.common();
    let mut cfg = base_config(cmd.name(), common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(n) = common.qubits {
        cfg.n_qubits = n;
    }
    if let Some(k) = common.seeds {
        cfg.mc.seeds = k;
        cfg.sim_check.seeds = k;
    }
    if let Some(shots) = common.shots {
        cfg.shots = shots;
    }
    if let Some(p) = common.noise_preset {
        cfg.noise = NoiseSection::from_preset(p.into());
    }
    match cmd {
        Command::Narma {
            length: Some(len), ..
        } => cfg.narma.length = *len,
        Command::Forecast { data: Some(d), .. } | Command::Diagnostics { data: Some(d), .. } => {
            cfg.forecast.data = Some(d.clone());
        }
        _ => {}
    }
    cfg.resolve()
}

/// Collects output files so the manifest can list them.
struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<fs::File>) -> Result<()>,
    {
        let mut w = BufWriter::new(fs::File::create(self.root.join(name))?);
        body(&mut w)?;
        w.flush()?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }
}

#[derive(Serialize)]
struct WithConfig<'a, T: Serialize> {
    #[serde(flatten)]
    body: T,
    config: &'a RunConfig,
}

fn required_data(cfg: &RunConfig) -> Result<&Path> {
    cfg.forecast.data.as_deref().ok_or_else(|| {
        config_error(
            "forecast.data",
            "no market CSV given (use --data or [forecast] data)",
        )
    })
}

fn execute(cmd: &Command, cfg: &RunConfig) -> Result<()> {
    let mut out = OutDir::new(&cmd.common().out)?;
    match cmd {
        Command::McSweep(_) => {
            let result: SweepResult = sweep(cfg.n_qubits, &cfg.sweep_settings())?;
            out.write("mc_sweep.csv", |w| write_sweep_csv(&result, w))?;
            out.write_json(
                "mc_curves.json",
                &WithConfig {
                    body: &result,
                    config: cfg,
                },
            )?;
            let best = &result.results[result.argmax];
            println!(
                "{} topologies, peak MC {:.4} at sequence index {} ({})",
                result.results.len(),
                best.mc,
                result.argmax,
                best.topology
            );
        }
        Command::Narma { .. } => {
            let topo = cfg.topology()?;
            let outcome = run_narma_benchmark(&cfg.narma_run(), &topo)?;
            out.write("narma_predictions.csv", |w| {
                let mut wtr = csv::Writer::from_writer(w);
                wtr.write_record(["t", "actual", "predicted"])?;
                for r in &outcome.records {
                    wtr.write_record([
                        r.t.to_string(),
                        r.actual.to_string(),
                        r.predicted.to_string(),
                    ])?;
                }
                wtr.flush()?;
                Ok(())
            })?;
            #[derive(Serialize)]
            struct Metrics {
                nmse: f64,
                records: usize,
                scored_from: usize,
            }
            let metrics = Metrics {
                nmse: outcome.nmse,
                records: outcome.records.len(),
                scored_from: outcome.scored_from,
            };
            out.write_json(
                "narma_metrics.json",
                &WithConfig {
                    body: metrics,
                    config: cfg,
                },
            )?;
            println!(
                "NARMA5 NMSE {:.4e} over {} scored steps",
                outcome.nmse,
                outcome.scored().len()
            );
        }
        Command::Forecast { .. } => {
            let series = load_market_csv(required_data(cfg)?)?;
            let topo = cfg.topology()?;
            let outcome = run_forecast(&series, &topo, &cfg.forecast_settings())?;
            out.write("forecasts.csv", |w| write_forecast_csv(&outcome.rows, w))?;
            out.write_json(
                "forecast_metrics.json",
                &WithConfig {
                    body: outcome.summary,
                    config: cfg,
                },
            )?;
            out.write("forecast_plot.csv", |w| {
                write_plot_csv(outcome.scored_rows(), w)
            })?;
            let s = &outcome.summary;
            println!(
                "{} forecasts ({} burn-in), MSE {:.4e}, residual mean {:.4} std {:.4}",
                s.records, s.burn_in_records, s.mse, s.residual_mean, s.residual_std
            );
        }
        Command::Diagnostics { .. } => {
            let series = load_market_csv(required_data(cfg)?)?;
            let report = diagnostics(&series);
            out.write_json(
                "diagnostics.json",
                &WithConfig {
                    body: &report,
                    config: cfg,
                },
            )?;
            let corr = report
                .corr_pct_change
                .map_or_else(|| "undefined".to_string(), |c| format!("{c:.4}"));
            println!("rows: {}", report.rows);
            println!("corr(dSPX%, dVIX%): {corr}");
            println!("mean VIX: {:.4}", report.mean_vix);
            match report.max_vix_date {
                Some(d) => println!("max VIX: {} on {d}", report.max_vix),
                None => println!("max VIX: {}", report.max_vix),
            }
            println!("all values positive: {}", report.all_positive);
        }
        Command::SimCheck(_) => {
            let report = run_sim_check(&cfg.sim_check_params())?;
            out.write_json(
                "sim_check.json",
                &WithConfig {
                    body: &report,
                    config: cfg,
                },
            )?;
            println!(
                "cos check: {}/{} cells within {:.4} ({})",
                report.cells_within,
                report.cells,
                report.tolerance,
                if report.cos_pass { "pass" } else { "FAIL" }
            );
            println!(
                "readout-flip check: {}",
                if report.flip_pass { "pass" } else { "FAIL" }
            );
            if !report.pass {
                return Err(Error::InvalidData("quantum-layer self-test failed".into()));
            }
        }
    }

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: cmd.name().to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        outputs: out.written.clone(),
    };
    let toml = cfg.to_toml_string()?;
    out.write(RESOLVED_CONFIG_FILE, |w| Ok(w.write_all(toml.as_bytes())?))?;
    out.write_json(MANIFEST_FILE, &manifest)?;
    Ok(())
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let cfg = match resolve_config(&cli.command) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let result = match cli.command.common().jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs as usize)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
            .and_then(|pool| pool.install(|| execute(&cli.command, &cfg))),
        None => execute(&cli.command, &cfg),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
