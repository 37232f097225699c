use serde::{Deserialize, Serialize};
use serde_json::Value;
use uqd_core::bne::{BlockAcceptance, Nesting};
use uqd_core::likelihood::{ConfidenceRegion, InformationMode};
use uqd_core::{ParametricFamily, UncertaintyReport};

pub const SCHEMA_VERSION: u32 = 1;

/// Top-level JSON document written by every reporting subcommand.
///
/// Field order is fixed by declaration; the config echo is a sorted map, so
/// identical runs serialize to identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportEnvelope<R> {
    pub schema_version: u32,
    pub subcommand: String,
    /// The fully resolved configuration, defaults included.
    pub config: Value,
    pub reports: Vec<R>,
    pub diagnostics: Diagnostics,
}

impl<R: Serialize> ReportEnvelope<R> {
    pub fn new(subcommand: &str, config: &impl Serialize, reports: Vec<R>, diagnostics: Diagnostics) -> Self {
        ReportEnvelope {
            schema_version: SCHEMA_VERSION,
            subcommand: subcommand.to_string(),
            config: serde_json::to_value(config).expect("configs serialize"),
            reports,
            diagnostics,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostics {
    /// Data rows read from the primary input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter_used: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<Vec<RegimeDiagnostics>>,
    /// Wall-clock time; only present with `--timings`, which makes the
    /// report non-reproducible byte for byte.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeDiagnostics {
    pub nesting: Nesting,
    pub draws: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceptance_rate: Option<f64>,
    pub blocks: Vec<BlockAcceptance>,
}

/// One query's decomposition. `x` is absent for a bare ensemble file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(flatten)]
    pub uncertainty: UncertaintyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MleReport {
    pub family: ParametricFamily,
    pub n: usize,
    pub theta_hat: Vec<f64>,
    pub loglik_at_max: f64,
    pub aic: f64,
    pub information_mode: InformationMode,
    /// Row-major `p × p` information matrix at the MLE.
    pub information: Vec<Vec<f64>>,
    pub confidence: ConfidenceRegion,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_round_trips() {
        let r = UncertaintyReport::from_total_and_aleatoric(0.1 + 0.2, 1.0 / 3.0).with_breakdown(0.01, 0.07);
        let env = ReportEnvelope::new(
            "entropy",
            &serde_json::json!({"b": 1, "a": [0.1]}),
            vec![QueryReport {
                x: Some(vec![1e-300, -2.5]),
                mean: None,
                uncertainty: r,
            }],
            Diagnostics {
                rows: Some(3),
                ..Diagnostics::default()
            },
        );
        let text = env.to_json();
        let back: ReportEnvelope<QueryReport> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, env);
        assert_eq!(back.to_json(), text);
        assert!(text.find("\"a\"").unwrap() < text.find("\"b\"").unwrap());
    }
}
