//! Command-line front-end: argument parsing, JSON run files, reports and
//! exit codes for the `nonlocality` binary.
//!
//! Exit codes are `0` on success, `1` when a checked claim is false and `2`
//! on bad input.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use nonlocality::{CorrelationError, JammingError, SpacetimeError};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use commands::{classify, QUANTUM_MAXIMAL_TOL};
pub use config::{Classification, Format, RunConfig, Task, Tolerances};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERDICT: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

/// Overrides the default geometric tolerance.
pub const TOL_ENV: &str = "NONLOCALITY_TOL";
/// Overrides the default probability tolerance.
pub const PROB_TOL_ENV: &str = "NONLOCALITY_PROB_TOL";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("cannot write CSV {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("cannot encode report: {0}")]
    Encode(serde_json::Error),
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
    #[error(transparent)]
    Jamming(#[from] JammingError),
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Parser, Debug)]
#[command(name = "nonlocality", version, about = "Nonlocal correlations, jamming and relativistic causality")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Geometric tolerance for intervals and cones.
    #[arg(long, global = true, env = TOL_ENV)]
    pub tol: Option<f64>,
    /// Probability tolerance for normalization and no-signalling.
    #[arg(long, global = true, env = PROB_TOL_ENV)]
    pub prob_tol: Option<f64>,
    /// Include wall-clock duration in the report.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    #[command(flatten)]
    Task(Box<Task>),
    /// Run a JSON run file, e.g. the `config` of an earlier report.
    Run { config: PathBuf },
}

/// Everything needed to reproduce and interpret one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// The invocation with every default and seed resolved.
    pub config: RunConfig,
    pub verdict: bool,
    pub results: Value,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<f64>,
}

impl Report {
    pub fn exit_code(&self) -> u8 {
        if self.verdict {
            EXIT_OK
        } else {
            EXIT_VERDICT
        }
    }
}

fn fresh_seed() -> u64 {
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    nanos ^ ((std::process::id() as u64) << 32)
}

/// Fills in anything that must be pinned for the run to be reproducible.
pub fn resolve(mut config: RunConfig) -> RunConfig {
    if let Task::Sample(s) = &mut config.task {
        s.seed.get_or_insert_with(fresh_seed);
    }
    config
}

/// Validates, runs and packages one configuration.
pub fn execute(config: RunConfig, timing: bool) -> Result<Report, CliError> {
    let config = resolve(config);
    config.validate()?;
    let start = Instant::now();
    let tol = &config.tolerances;
    let out = match &config.task {
        Task::Chsh(c) => commands::run_chsh(c, tol),
        Task::Nosig(n) => commands::run_nosig(n, tol),
        Task::Jam(j) => commands::run_jam(j, tol),
        Task::Boost(b) => commands::run_boost(b, tol),
        Task::Sample(s) => commands::run_sample(s, tol),
    }?;
    let duration_ms = timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    Ok(Report {
        config,
        verdict: out.verdict,
        results: out.results,
        seed: out.seed,
        duration_ms,
    })
}

/// Builds the run configuration described by parsed arguments. Flags and
/// environment variables take precedence over values in a run file.
pub fn config_from_cli(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.command {
        Command::Task(t) => RunConfig {
            task: t.as_ref().clone(),
            tolerances: Tolerances::default(),
            format: Format::default(),
        },
        Command::Run { config } => commands::read_json(config)?,
    };
    if let Some(f) = cli.format {
        config.format = f;
    }
    if let Some(t) = cli.tol {
        config.tolerances.geometric = t;
    }
    if let Some(t) = cli.prob_tol {
        config.tolerances.probability = t;
    }
    Ok(config)
}

pub fn to_json(report: &Report) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(report).map_err(CliError::Encode)?;
    s.push('\n');
    Ok(s)
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Array(items) if items.iter().all(|i| scalar(i).is_some()) => {
            let parts: Vec<String> = items.iter().filter_map(scalar).collect();
            rows.push((prefix.to_string(), format!("[{}]", parts.join(", "))));
        }
        Value::Array(items) => {
            for (k, item) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{k}]"), item, rows);
            }
        }
        Value::Object(map) => {
            for (k, item) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, item, rows);
            }
        }
        other => rows.push((prefix.to_string(), scalar(other).unwrap_or_default())),
    }
}

/// Two-column text view of a report.
pub fn render_text(report: &Report) -> String {
    let command = serde_json::to_value(&report.config.task)
        .ok()
        .and_then(|v| v.get("command").and_then(Value::as_str).map(str::to_string))
        .unwrap_or_default();
    let mut rows = vec![
        ("command".to_string(), command),
        ("verdict".to_string(), report.verdict.to_string()),
        ("tol".to_string(), format!("{:e}", report.config.tolerances.geometric)),
        ("prob_tol".to_string(), format!("{:e}", report.config.tolerances.probability)),
    ];
    if let Some(seed) = report.seed {
        rows.push(("seed".into(), seed.to_string()));
    }
    if let Some(ms) = report.duration_ms {
        rows.push(("duration_ms".into(), format!("{ms:.3}")));
    }
    flatten("", &report.results, &mut rows);
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter()
        .map(|(k, v)| format!("{k:<width$}  {v}\n"))
        .collect()
}

/// Parses `args`, runs and prints; returns the process exit code.
pub fn run_from_args<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = config_from_cli(&cli).and_then(|config| {
        let format = config.format;
        let report = execute(config, cli.timing)?;
        let text = match format {
            Format::Json => to_json(&report)?,
            Format::Text => render_text(&report),
        };
        Ok((report, text))
    });
    match result {
        Ok((report, text)) => {
            let _ = out.write_all(text.as_bytes());
            report.exit_code()
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

pub fn main_entry() -> ExitCode {
    let code = run_from_args(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    ExitCode::from(code)
}
