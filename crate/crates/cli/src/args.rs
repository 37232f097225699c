use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::GridRange;

#[derive(Debug, Parser)]
#[command(
    name = "uqd",
    version,
    about = "Decompose predictive uncertainty into aleatoric and epistemic parts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form MLE, Fisher information, AIC and Wald intervals for one column.
    Mle(MleArgs),
    /// Exact GP regression with the noise / function variance split.
    Gp(GpArgs),
    /// Entropy decomposition of an ensemble file or a bootstrap classifier ensemble.
    Entropy(EntropyArgs),
    /// Nested Bayesian nonparametric ensemble with the full six-field report.
    Bne(BneArgs),
    /// Write a seeded synthetic dataset.
    Simgen(SimgenArgs),
}

/// Options that shape where output goes rather than what is computed.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML file with the same keys as the long flags (flags take precedence).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// Record wall-clock runtime in the diagnostics (breaks byte-identical reruns).
    #[arg(long)]
    pub timings: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MleArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    /// CSV file with a header row.
    #[arg(long, value_name = "FILE")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Column to read (default: the only column).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    /// bernoulli | gaussian | categorical
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    /// Number of categories (categorical only); labels are 0..classes-1.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<usize>,
    /// Confidence level of the Wald intervals.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    /// observed | expected
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub information: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GpArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    /// Training CSV: feature columns plus `y`.
    #[arg(long, value_name = "FILE")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    /// rbf | linear | constant
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    /// Kernel amplitude.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal_variance: Option<f64>,
    /// RBF lengthscale.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lengthscale: Option<f64>,
    /// Linear-kernel bias.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias: Option<f64>,
    /// Observation noise variance (the aleatoric part).
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_variance: Option<f64>,
    /// Fit to `y - mean(y)` and add the mean back to predictions.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub center_y: bool,
    /// Query CSV with the training feature columns.
    #[arg(long, value_name = "FILE")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub query: Option<PathBuf>,
    /// Evenly spaced 1-D queries, `LO:HI:N`.
    #[arg(long, value_name = "LO:HI:N", value_parser = parse_grid, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridRange>,
    /// Band CSV: features, mu, total, aleatoric, epistemic.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub curves: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EntropyArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    /// One member per row of label probabilities; optional first column `weight`.
    #[arg(long, value_name = "FILE")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<PathBuf>,
    /// Labelled CSV (features plus `label`) for a bootstrap ensemble.
    #[arg(long, value_name = "FILE")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    /// Query CSV with the training feature columns.
    #[arg(long, value_name = "FILE")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub query: Option<PathBuf>,
    /// Bootstrap ensemble size.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub members: Option<usize>,
    /// Bootstrap seed.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Band CSV over the query points (bootstrap mode).
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub curves: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BneArgs {
    #[command(flatten)]
    pub common: Common,
    /// Training CSV: feature columns, `y`, and base predictions `f1..fK`.
    #[arg(long, value_name = "FILE")]
    pub train: Option<PathBuf>,
    /// Query CSV: the training feature columns and `f1..fK`.
    #[arg(long, value_name = "FILE")]
    pub query: Option<PathBuf>,
    /// Observation noise variance.
    #[arg(long)]
    pub noise_variance: Option<f64>,
    /// Retained draws per regime.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Sampler seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimgenArgs {
    /// TOML file with `scenario`, `n` and `seed`.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// fig3a | fig3b | fig7 | bump
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    /// Number of points.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Generator seed.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output CSV.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: PathBuf,
}

fn parse_grid(s: &str) -> Result<GridRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err("expected LO:HI:N".into());
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok(GridRange {
        lo: num(lo)?,
        hi: num(hi)?,
        n: n.trim().parse().map_err(|e| format!("`{n}`: {e}"))?,
    })
}
