//! `iqkd` command-line front end.
//!
//! Exit status: 0 on success, 1 on I/O or simulation failure, 2 on usage or
//! configuration errors, 3 when `run` completes but error estimation aborts
//! (eavesdropper suspected).

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{Map, Value};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

use crate::analysis::{efficiency_comparison, exact_table, security_metrics};
use crate::config::{load_document, ConfigError, ExperimentConfig};
use crate::protocol::{run_experiment, ExperimentRun, RoundRecord};
use crate::report::{ExperimentReport, PublicTranscript, RoundLogRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ABORT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "iqkd", version, about = "Interference-based QKD simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a Monte Carlo experiment and write the report.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Write the per-round CSV log here.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Write the public classical transcript (JSON) here.
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Worker threads; results do not depend on this.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Write the exact outcome table for every bit pair.
    Exact {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Write the reduced-density security metrics.
    Security {
        /// Write the JSON result here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare measured sifting efficiency with reference protocols.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Use an existing report instead of running an experiment.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// JSON config file; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Per-field overrides; each replaces the same key from the config file.
#[derive(Debug, Args, Clone, Default)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub rounds: Option<u64>,
    /// michelson | mach_zehnder
    #[arg(long)]
    pub mode: Option<String>,
    /// single_photon | coherent
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long = "t-a")]
    pub t_a: Option<f64>,
    #[arg(long = "t-b")]
    pub t_b: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub dark: Option<f64>,
    #[arg(long = "phase-noise-sigma")]
    pub phase_noise_sigma: Option<f64>,
    #[arg(long = "static-phase", allow_hyphen_values = true)]
    pub static_phase: Option<f64>,
    /// none | intercept_resend | pns_tap
    #[arg(long)]
    pub eve: Option<String>,
    #[arg(long = "tap-transmittance")]
    pub tap_transmittance: Option<f64>,
    #[arg(long = "sample-fraction")]
    pub sample_fraction: Option<f64>,
    #[arg(long = "qber-threshold")]
    pub qber_threshold: Option<f64>,
}

impl Overrides {
    fn apply(&self, doc: &mut Map<String, Value>) {
        let mut set = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                doc.insert(k.to_string(), v);
            }
        };
        set("seed", self.seed.map(Value::from));
        set("rounds", self.rounds.map(Value::from));
        set("mode", self.mode.clone().map(Value::from));
        set("source", self.source.clone().map(Value::from));
        set("mu", self.mu.map(Value::from));
        set("t_a", self.t_a.map(Value::from));
        set("t_b", self.t_b.map(Value::from));
        set("eta", self.eta.map(Value::from));
        set("dark", self.dark.map(Value::from));
        set("phase_noise_sigma", self.phase_noise_sigma.map(Value::from));
        set("static_phase", self.static_phase.map(Value::from));
        set("eve", self.eve.clone().map(Value::from));
        set("tap_transmittance", self.tap_transmittance.map(Value::from));
        set("sample_fraction", self.sample_fraction.map(Value::from));
        set("qber_threshold", self.qber_threshold.map(Value::from));
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Simulation(#[from] crate::Error),
    #[error("{0}")]
    Format(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        }
    }
}

/// Builds the configuration from an optional file plus flag overrides.
pub fn parse_config(
    path: Option<&Path>,
    overrides: &Overrides,
) -> Result<ExperimentConfig, CliError> {
    let (doc, origin) = match path {
        Some(p) => (load_document(p)?, p.display().to_string()),
        None => (Value::Object(Map::new()), "<defaults>".to_string()),
    };
    let Value::Object(mut map) = doc else {
        return Err(ConfigError::Malformed {
            origin,
            message: "top level must be a JSON object".into(),
        }
        .into());
    };
    overrides.apply(&mut map);
    Ok(ExperimentConfig::from_json_value(
        Value::Object(map),
        &origin,
    )?)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Format(e.to_string()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(io_err(p)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(io_err(Path::new("<stdout>")))
        }
    }
}

/// Writes the round log with the fixed header.
pub fn write_round_log<W: Write>(records: &[RoundRecord], w: W) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(w);
    for r in records {
        writer.serialize(RoundLogRow::from(r))?;
    }
    writer.flush()?;
    Ok(())
}

pub struct RunOutput {
    pub report: ExperimentReport,
    pub run: ExperimentRun,
}

pub fn cmd_run(config: &ExperimentConfig, workers: usize) -> Result<RunOutput, CliError> {
    let started = Instant::now();
    let run = run_experiment(config, workers.max(1))?;
    let wall = started.elapsed().as_secs_f64() * 1e3;
    Ok(RunOutput {
        report: ExperimentReport::from_run(config, &run, workers.max(1), wall),
        run,
    })
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run {
            common,
            log,
            transcript,
            workers,
        } => {
            let config = parse_config(common.config.as_deref(), &common.overrides)?;
            let RunOutput { report, run } = cmd_run(&config, workers)?;
            if let Some(path) = &log {
                let file = std::fs::File::create(path).map_err(io_err(path))?;
                write_round_log(&run.records, std::io::BufWriter::new(file)).map_err(|e| {
                    CliError::Io {
                        path: path.display().to_string(),
                        source: std::io::Error::other(e),
                    }
                })?;
            }
            if let Some(path) = &transcript {
                emit(Some(path), &to_json(&PublicTranscript::from_run(&run))?)?;
            }
            emit(common.out.as_deref(), &to_json(&report)?)?;
            Ok(if report.qber.abort {
                EXIT_ABORT
            } else {
                EXIT_OK
            })
        }
        Command::Exact { common } => {
            let config = parse_config(common.config.as_deref(), &common.overrides)?;
            let table = exact_table(&config)?;
            emit(common.out.as_deref(), &to_json(&table)?)?;
            Ok(EXIT_OK)
        }
        Command::Security { out } => {
            emit(out.as_deref(), &to_json(&security_metrics())?)?;
            Ok(EXIT_OK)
        }
        Command::Compare {
            common,
            report,
            workers,
        } => {
            let report = match &report {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
                    serde_json::from_str::<ExperimentReport>(&text)
                        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?
                }
                None => {
                    let config = parse_config(common.config.as_deref(), &common.overrides)?;
                    cmd_run(&config, workers)?.report
                }
            };
            emit(
                common.out.as_deref(),
                &to_json(&efficiency_comparison(&report))?,
            )?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("iqkd: {e}");
            e.exit_code()
        }
    }
}
