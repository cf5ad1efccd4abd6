//! Command-line front end: argument model, command dispatch and output
//! rendering. All numbers come straight from `gaussent`; this crate only
//! lays out grids, rounds to 12 significant digits and formats.

use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use gaussent::protocol::{
    final_cm, gap_profile, mu_m, reduced_pair_cm, shared_cm, stage_state, threshold_r_e,
    threshold_report, ProtocolParams, Route, Stage, ThresholdReport, MODE_A,
};
use gaussent::{
    classify_three_mode, sample_preparation, sigma_x, two_mode_condition, GaussianState,
    SeparabilityReport,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Parser)]
#[command(
    name = "gaussent",
    version,
    about = "Gaussian entanglement-sharing analyses"
)]
pub struct Cli {
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Output format; sweeps default to csv, reports to json.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Threshold squeezings r_l, r_e, r_m and the gap r_m - r_e at one noise level.
    #[command(allow_negative_numbers = true)]
    Thresholds {
        #[arg(long)]
        epsilon: f64,
    },
    /// Pair and localizable entanglement versus squeezing at fixed noise.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.0)]
        r_min: f64,
        #[arg(long, default_value_t = 1.0)]
        r_max: f64,
        /// Number of grid points, endpoints included.
        #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u64).range(2..))]
        steps: u64,
    },
    /// Thresholds and gap versus noise.
    #[command(allow_negative_numbers = true)]
    GapSweep {
        #[arg(long, default_value_t = 0.001)]
        eps_min: f64,
        #[arg(long, default_value_t = 3.0)]
        eps_max: f64,
        /// Number of grid points, endpoints included.
        #[arg(long, default_value_t = 300, value_parser = clap::value_parser!(u64).range(2..))]
        steps: u64,
    },
    /// Full three-mode state and separability report at one protocol stage.
    #[command(allow_negative_numbers = true)]
    Analyze {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_parser = parse_stage)]
        stage: Stage,
    },
    /// Monte Carlo check of the correlated-displacement preparation.
    #[command(allow_negative_numbers = true)]
    Montecarlo {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(2..))]
        samples: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Separability report for a three-mode CM file.
    Classify {
        #[arg(long)]
        input: PathBuf,
    },
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    s.parse::<Stage>().map_err(|_| {
        let names: Vec<&str> = Stage::ALL.iter().map(|st| st.as_str()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

#[derive(Debug)]
pub enum RunError {
    /// Bad flag combination; exit code 2.
    Usage(String),
    /// Validation or numerical failure; exit code 1.
    Failed(anyhow::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Usage(msg) => write!(f, "{msg}"),
            RunError::Failed(err) => write!(f, "{err:#}"),
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for RunError {
    fn from(err: E) -> Self {
        RunError::Failed(err.into())
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => 2,
            RunError::Failed(_) => 1,
        }
    }
}

/// Rounds to 12 significant digits; non-finite values pass through.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Rounds every floating-point number in a JSON tree.
fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| serde_json::Number::from_f64(round12(x)))
            .map_or(Value::Number(n), Value::Number),
        Value::Array(items) => Value::Array(items.into_iter().map(round_json).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, round_json(v))).collect())
        }
        other => other,
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, RunError> {
    let tree = round_json(serde_json::to_value(value)?);
    Ok(serde_json::to_string_pretty(&tree)? + "\n")
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, RunError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
    Ok(String::from_utf8(bytes)?)
}

fn render<T: Serialize>(rows: &[T], format: Format) -> Result<String, RunError> {
    match format {
        Format::Csv => to_csv(rows),
        Format::Json => to_json(&rows),
    }
}

/// `n` evenly spaced points from `lo` to `hi`, both included.
fn grid(lo: f64, hi: f64, n: u64, what: &str) -> Result<Vec<f64>, RunError> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(RunError::Usage(format!(
            "{what}: need min < max, got {lo} and {hi}"
        )));
    }
    let last = (n - 1) as f64;
    Ok((0..n)
        .map(|k| {
            if k == n - 1 {
                hi
            } else {
                lo + (hi - lo) * (k as f64 / last)
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdsOut {
    pub epsilon: f64,
    pub r_l: f64,
    pub r_e: f64,
    pub r_m: f64,
    pub gap: f64,
}

/// One line of `sweep`. `class_final` is the class of the final state
/// (both routes give the same class).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: f64,
    pub mu_pair: f64,
    pub mu_m: f64,
    #[serde(rename = "sigma_shared_A")]
    pub sigma_shared_a: f64,
    pub class_final: String,
}

impl From<ThresholdReport> for ThresholdsOut {
    fn from(t: ThresholdReport) -> Self {
        Self {
            epsilon: round12(t.epsilon),
            r_l: round12(t.r_l),
            r_e: round12(t.r_e),
            r_m: round12(t.r_m),
            gap: round12(t.gap),
        }
    }
}

fn sweep_row(r: f64, epsilon: f64) -> Result<SweepRow, RunError> {
    let params = ProtocolParams::new(r, epsilon)?;
    let (shared, _) = shared_cm(params);
    let class = classify_three_mode(final_cm(params, Route::ViaAPrime).cm())?.class_label;
    Ok(SweepRow {
        r: round12(r),
        mu_pair: round12(two_mode_condition(&reduced_pair_cm(params))?.mu),
        mu_m: round12(mu_m(params)?),
        sigma_shared_a: round12(sigma_x(shared.cm(), MODE_A)?.sigma),
        class_final: class.to_string(),
    })
}

#[derive(Serialize)]
struct AnalyzeOut<'a> {
    stage: Stage,
    r: f64,
    epsilon: f64,
    n_modes: usize,
    cm: Vec<Vec<f64>>,
    displacement: Vec<f64>,
    sigma: SigmaTriple,
    #[serde(flatten)]
    report: &'a SeparabilityReport,
    /// `ε < r ≤ r_e`: the shared state is entangled but the final
    /// tripartite claim is not backed by the reduced pair.
    threshold_window: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'static str>,
}

#[derive(Serialize)]
struct SigmaTriple {
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "A′")]
    a_prime: f64,
    #[serde(rename = "B")]
    b: f64,
}

const WINDOW_NOTE: &str =
    "epsilon < r <= r_e: Sigma_A < 0 for the shared state, but the A-B pair is not \
                           entangled, so full inseparability of the final state is not established";

fn analyze(r: f64, epsilon: f64, stage: Stage) -> Result<String, RunError> {
    let params = ProtocolParams::new(r, epsilon)?;
    let st = stage_state(params, stage)?;
    let r_e = threshold_r_e(epsilon)?;
    let window = epsilon < r && r <= r_e;
    let out = AnalyzeOut {
        stage,
        r,
        epsilon,
        n_modes: st.state.n_modes(),
        cm: st.state.cm().to_rows(),
        displacement: st.state.displacement().iter().copied().collect(),
        sigma: SigmaTriple {
            a: st.report.verdicts[0].sigma,
            a_prime: st.report.verdicts[1].sigma,
            b: st.report.verdicts[2].sigma,
        },
        report: &st.report,
        threshold_window: window,
        note: window.then_some(WINDOW_NOTE),
    };
    to_json(&out)
}

fn json_only(format: Option<Format>, command: &str) -> Result<(), RunError> {
    if format == Some(Format::Csv) {
        return Err(RunError::Usage(format!(
            "{command} only supports --format json"
        )));
    }
    Ok(())
}

/// Runs a parsed command and returns the text to emit.
pub fn run(cli: &Cli) -> Result<String, RunError> {
    match &cli.command {
        Command::Thresholds { epsilon } => {
            let out = ThresholdsOut::from(threshold_report(*epsilon)?);
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => to_json(&out),
                Format::Csv => to_csv(&[out]),
            }
        }
        Command::Sweep {
            epsilon,
            r_min,
            r_max,
            steps,
        } => {
            let rs = grid(*r_min, *r_max, *steps, "sweep r range")?;
            let rows = rs
                .par_iter()
                .map(|&r| sweep_row(r, *epsilon))
                .collect::<Result<Vec<_>, _>>()?;
            render(&rows, cli.format.unwrap_or(Format::Csv))
        }
        Command::GapSweep {
            eps_min,
            eps_max,
            steps,
        } => {
            let eps = grid(*eps_min, *eps_max, *steps, "gap-sweep epsilon range")?;
            let rows: Vec<ThresholdsOut> = gap_profile(&eps)?
                .into_iter()
                .map(ThresholdsOut::from)
                .collect();
            render(&rows, cli.format.unwrap_or(Format::Csv))
        }
        Command::Analyze { r, epsilon, stage } => {
            json_only(cli.format, "analyze")?;
            analyze(*r, *epsilon, *stage)
        }
        Command::Montecarlo {
            r,
            epsilon,
            samples,
            seed,
        } => {
            json_only(cli.format, "montecarlo")?;
            let count = usize::try_from(*samples)
                .map_err(|_| RunError::Usage("--samples too large".into()))?;
            let batch = sample_preparation(ProtocolParams::new(*r, *epsilon)?, count, *seed)?;
            let tree: Value = serde_json::from_str(&batch.to_json())?;
            to_json(&tree)
        }
        Command::Classify { input } => {
            json_only(cli.format, "classify")?;
            let text = std::fs::read_to_string(input)
                .with_context(|| format!("reading {}", input.display()))?;
            let state = GaussianState::from_json(&text)
                .with_context(|| format!("invalid CM file {}", input.display()))?;
            let report =
                classify_three_mode(state.cm()).context("classification needs a three-mode CM")?;
            to_json(&report)
        }
    }
}

/// Applies the `GAUSSENT_THREADS` cap to the global pool, if set.
pub fn configure_threads(var: Option<&str>) -> Result<(), RunError> {
    let Some(raw) = var else { return Ok(()) };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        RunError::Usage(format!(
            "GAUSSENT_THREADS must be a positive integer, got '{raw}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| RunError::Failed(e.into()))
}

/// Writes `text` to `--output` or stdout.
pub fn emit(cli: &Cli, text: &str) -> Result<(), RunError> {
    match &cli.output {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => {
            use std::io::Write;
            std::io::stdout().lock().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}
