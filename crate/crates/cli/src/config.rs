//! Command parameters, shared by the argument parser and JSON run files.

use std::f64::consts::TAU;
use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use nonlocality::{DEFAULT_GEOMETRIC_TOL, DEFAULT_PROBABILITY_TOL};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Interval and cone tolerance.
    pub geometric: f64,
    /// Probability and no-signalling tolerance.
    pub probability: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            geometric: DEFAULT_GEOMETRIC_TOL,
            probability: DEFAULT_PROBABILITY_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Singlet,
    Superquantum,
    Deterministic,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpolantArg {
    Sine,
    Smoothstep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnglePreset {
    Eq2,
    Tsirelson,
}

/// Where a CHSH value sits relative to the classical, quantum and algebraic
/// bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Classical,
    Quantum,
    QuantumMaximal,
    Superquantum,
}

/// An angle-parametrized correlation model and the analyser angles to
/// evaluate it at.
#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Strategy id 0–15 for `--model deterministic`.
    #[arg(long)]
    pub strategy: Option<u8>,
    /// Bridge used by `--model superquantum` (default sine).
    #[arg(long, value_enum)]
    pub interpolant: Option<InterpolantArg>,
    /// JSON `{"theta": [...], "values": [...]}` for `--model table`.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub angles: Option<AnglePreset>,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub a_prime: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b_prime: Option<f64>,
}

/// A box given by file or by built-in name.
#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoxArgs {
    /// JSON box file `{"P": [[[p++, p+-, p-+, p--], ..], ..]}`.
    #[arg(long = "box")]
    #[serde(rename = "box")]
    pub box_file: Option<PathBuf>,
    #[arg(long)]
    pub builtin: Option<String>,
}

impl BoxArgs {
    pub fn is_set(&self) -> bool {
        self.box_file.is_some() || self.builtin.is_some()
    }
}

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChshArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: BoxArgs,
    /// Search the angles for the largest |CHSH|.
    #[arg(long)]
    pub optimize: bool,
    /// `all` for the full table of local deterministic strategies, or one id.
    #[arg(long)]
    pub deterministic: Option<String>,
    /// Write the model's E(θ) on [0, π] to this CSV file.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Samples in the curve (default 181).
    #[arg(long)]
    pub points: Option<usize>,
    /// Fail (exit 1) unless the value falls in this class.
    #[arg(long, value_enum)]
    pub expect: Option<Classification>,
}

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NosigArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: BoxArgs,
    /// Check every built-in box.
    #[arg(long)]
    pub all: bool,
}

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JamArgs {
    /// JSON configuration `{"a": [..], "b": [..], "j": [..], "d": n}`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Event coordinates `x1,..,xd,t`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub a: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub b: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub j: Option<Vec<f64>>,
    /// Latest admissible jammer time for the canonical pair.
    #[arg(long)]
    pub latest: bool,
    #[arg(long)]
    pub d: Option<usize>,
    /// Jammer position for `--latest` (default: the midpoint).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub position: Option<Vec<f64>>,
    /// JSON list of configurations to check for causal loops.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Write binary margin against jammer time to this CSV file.
    #[arg(long)]
    pub sweep: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub sweep_from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sweep_to: Option<f64>,
    #[arg(long)]
    pub sweep_steps: Option<usize>,
    /// Apply the jam transform to this box instead.
    #[command(flatten)]
    #[serde(flatten)]
    pub source: BoxArgs,
    /// Jamming strength in [0, 1] for the transform (default 1).
    #[arg(long)]
    pub strength: Option<f64>,
}

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostArgs {
    /// JSON list of events.
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// One event `x1,..,xd,t`; repeat for more.
    #[arg(long = "event", allow_negative_numbers = true)]
    pub event: Vec<String>,
    /// Boost velocity `v1,..,vd`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub v: Option<Vec<f64>>,
    /// Enumerate the time orderings reachable over a grid of boosts.
    #[arg(long)]
    pub enumerate: bool,
    #[arg(long)]
    pub max_speed: Option<f64>,
    #[arg(long)]
    pub speed_step: Option<f64>,
    #[arg(long)]
    pub directions: Option<usize>,
    /// Seed for the random directions used in three or more dimensions.
    #[arg(long)]
    pub grid_seed: Option<u64>,
}

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: BoxArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Samples per setting pair.
    #[arg(long)]
    pub n: Option<u64>,
    /// Generated and echoed when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fail (exit 1) unless the estimate is within 5 standard errors.
    #[arg(long, allow_negative_numbers = true)]
    pub expect_chsh: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Task {
    /// CHSH values of models, boxes and deterministic strategies.
    Chsh(ChshArgs),
    /// No-signalling check of a box.
    Nosig(NosigArgs),
    /// Jamming configurations, latest jammer times, scenarios and the jam
    /// transform.
    Jam(JamArgs),
    /// Boosts and reachable time orderings.
    Boost(BoostArgs),
    /// Finite-sample CHSH estimate.
    Sample(SampleArgs),
}

/// A complete, reproducible invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub task: Task,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub format: Format,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

fn check_angle(name: &str, v: Option<f64>) -> Result<(), CliError> {
    match v {
        Some(x) if !x.is_finite() || x.abs() > TAU => {
            Err(invalid(format!("angle --{name} = {x} outside [-2pi, 2pi]")))
        }
        _ => Ok(()),
    }
}

fn check_finite(name: &str, v: &[f64]) -> Result<(), CliError> {
    match v.iter().find(|x| !x.is_finite()) {
        Some(x) => Err(invalid(format!("--{name} contains {x}"))),
        None => Ok(()),
    }
}

impl ModelArgs {
    fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [
            ("a", self.a),
            ("a-prime", self.a_prime),
            ("b", self.b),
            ("b-prime", self.b_prime),
        ] {
            check_angle(name, v)?;
        }
        if self.strategy.is_some_and(|s| s > 15) {
            return Err(invalid("--strategy must be 0..=15"));
        }
        Ok(())
    }
}

impl RunConfig {
    /// Checks every numeric parameter before anything runs.
    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.tolerances;
        for (name, v) in [("tol", t.geometric), ("prob-tol", t.probability)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("--{name} must be finite and non-negative")));
            }
        }
        match &self.task {
            Task::Chsh(c) => {
                c.model.validate()?;
                if c.points.is_some_and(|p| p < 2) {
                    return Err(invalid("--points must be at least 2"));
                }
            }
            Task::Nosig(_) => {}
            Task::Jam(j) => {
                for (name, v) in [("a", &j.a), ("b", &j.b), ("j", &j.j), ("position", &j.position)] {
                    if let Some(v) = v {
                        check_finite(name, v)?;
                    }
                }
                if j.d == Some(0) {
                    return Err(invalid("--d must be at least 1"));
                }
                if let Some(s) = j.strength {
                    if !(0.0..=1.0).contains(&s) {
                        return Err(invalid("--strength must lie in [0, 1]"));
                    }
                }
                if j.sweep_steps.is_some_and(|s| s < 2) {
                    return Err(invalid("--sweep-steps must be at least 2"));
                }
                for (name, v) in [("sweep-from", j.sweep_from), ("sweep-to", j.sweep_to)] {
                    if v.is_some_and(|x| !x.is_finite()) {
                        return Err(invalid(format!("--{name} must be finite")));
                    }
                }
            }
            Task::Boost(b) => {
                if let Some(v) = &b.v {
                    check_finite("v", v)?;
                    let speed = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if speed >= 1.0 {
                        return Err(invalid(format!("boost speed {speed} must be below 1")));
                    }
                }
                if let Some(s) = b.max_speed {
                    if !(s > 0.0 && s < 1.0) {
                        return Err(invalid("--max-speed must lie in (0, 1)"));
                    }
                }
                if b.speed_step.is_some_and(|s| !(s.is_finite() && s > 0.0)) {
                    return Err(invalid("--speed-step must be positive"));
                }
                if b.directions == Some(0) {
                    return Err(invalid("--directions must be at least 1"));
                }
            }
            Task::Sample(s) => {
                s.model.validate()?;
                if s.n == Some(0) {
                    return Err(invalid("--n must be at least 1"));
                }
                if s.expect_chsh.is_some_and(|x| !x.is_finite()) {
                    return Err(invalid("--expect-chsh must be finite"));
                }
            }
        }
        Ok(())
    }
}
