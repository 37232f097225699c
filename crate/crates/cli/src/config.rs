//! Run configuration: an optional TOML file overlaid by command-line flags.
//!
//! Both layers are turned into JSON objects and merged key by key (flags
//! win, tables merge recursively), then deserialized into the subcommand's
//! config type. Unknown keys are rejected at that point.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use uqd_core::bne::{BneConfig, Nesting, ProposalScales, SamplerConfig};
use uqd_core::likelihood::InformationMode;
use uqd_core::simgen::ScenarioKind;
use uqd_core::{Kernel, ParametricFamily};

use crate::error::{CliError, CliResult};

pub fn load_file(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let table: toml::Table =
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))?;
    serde_json::to_value(table).map_err(|e| CliError::Config(e.to_string()))
}

/// Recursively overlays `top` onto `base`.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, top) => *slot = top,
    }
}

/// Merges the optional config file with flag overrides and deserializes.
pub fn resolve<T: DeserializeOwned>(file: Option<&Path>, flags: Value) -> CliResult<T> {
    let mut merged = match file {
        Some(p) => load_file(p)?,
        None => Value::Object(Map::new()),
    };
    merge(&mut merged, flags);
    serde_json::from_value(merged).map_err(|e| CliError::Config(e.to_string()))
}

/// Sets `value` at a dotted path, creating tables on the way.
pub fn set_path(root: &mut Value, dotted: &str, value: Value) {
    let mut cur = root;
    let mut parts = dotted.split('.').peekable();
    while let Some(part) = parts.next() {
        if !cur.is_object() {
            *cur = Value::Object(Map::new());
        }
        let obj = cur.as_object_mut().expect("just made an object");
        if parts.peek().is_none() {
            obj.insert(part.to_string(), value);
            return;
        }
        cur = obj.entry(part).or_insert_with(|| Value::Object(Map::new()));
    }
}

fn one() -> f64 {
    1.0
}

fn default_level() -> f64 {
    0.95
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Bernoulli,
    Gaussian,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MleConfig {
    pub data: PathBuf,
    /// Column to read; may be omitted for single-column files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    pub family: FamilyName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<usize>,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "observed")]
    pub information: InformationMode,
}

fn observed() -> InformationMode {
    InformationMode::Observed
}

impl MleConfig {
    pub fn family(&self) -> CliResult<ParametricFamily> {
        match (self.family, self.classes) {
            (FamilyName::Bernoulli, None) => Ok(ParametricFamily::Bernoulli),
            (FamilyName::Gaussian, None) => Ok(ParametricFamily::Gaussian),
            (FamilyName::Categorical, Some(classes)) if classes >= 2 => Ok(ParametricFamily::Categorical { classes }),
            (FamilyName::Categorical, _) => Err(CliError::Config("categorical family needs `classes` >= 2".into())),
            (_, Some(_)) => Err(CliError::Config(
                "`classes` only applies to the categorical family".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelName {
    Rbf,
    Linear,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpConfig {
    pub train: PathBuf,
    #[serde(default = "rbf")]
    pub kernel: KernelName,
    #[serde(default = "one")]
    pub signal_variance: f64,
    /// rbf only; defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengthscale: Option<f64>,
    /// linear only; defaults to 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<f64>,
    pub noise_variance: f64,
    /// Subtract the training mean of y before fitting and add it back to
    /// predicted means (the prior mean is otherwise zero).
    #[serde(default)]
    pub center_y: bool,
    /// Query file with the training feature columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<PathBuf>,
    /// `[lo, hi, n]`: an evenly spaced 1-D query grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridRange>,
}

fn rbf() -> KernelName {
    KernelName::Rbf
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GpConfig {
    pub fn kernel(&self) -> CliResult<Kernel> {
        let k = match self.kernel {
            KernelName::Rbf if self.bias.is_none() => Kernel::Rbf {
                signal_variance: self.signal_variance,
                lengthscale: self.lengthscale.unwrap_or(1.0),
            },
            KernelName::Linear if self.lengthscale.is_none() => Kernel::Linear {
                signal_variance: self.signal_variance,
                bias: self.bias.unwrap_or(0.0),
            },
            KernelName::Constant if self.lengthscale.is_none() && self.bias.is_none() => Kernel::Constant {
                signal_variance: self.signal_variance,
            },
            _ => {
                return Err(CliError::Config(
                    "`lengthscale` applies to rbf only and `bias` to linear only".into(),
                ))
            }
        };
        Ok(k.validated()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyConfig {
    /// Member-per-row probability file, optional leading `weight` column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<PathBuf>,
    /// Labelled training data (`label` column) for a bootstrap ensemble.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    /// Query points for the bootstrap ensemble.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<PathBuf>,
    #[serde(default = "default_members")]
    pub members: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_members() -> usize {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimgenConfig {
    pub scenario: ScenarioKind,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

/// y-grid: explicit edges, or `edges` points spanning the training targets
/// padded by `pad_sds` noise standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_edges")]
    pub edges: usize,
    #[serde(default = "default_pad")]
    pub pad_sds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

fn default_edges() -> usize {
    121
}

fn default_pad() -> f64 {
    4.0
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            edges: default_edges(),
            pad_sds: default_pad(),
            values: None,
        }
    }
}

/// Residual-process knots: explicit rows, or `count` evenly spaced points
/// over the range of a single feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnotSpec {
    #[serde(default = "default_knots")]
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
}

fn default_knots() -> usize {
    8
}

impl Default for KnotSpec {
    fn default() -> Self {
        KnotSpec {
            count: default_knots(),
            points: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "yes")]
    pub adapt: bool,
    #[serde(default)]
    pub proposal_scales: ScalesSection,
}

fn default_samples() -> usize {
    1000
}

fn yes() -> bool {
    true
}

impl Default for SamplerSection {
    fn default() -> Self {
        SamplerSection {
            n_samples: default_samples(),
            burn_in: None,
            seed: 0,
            adapt: true,
            proposal_scales: ScalesSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalesSection {
    pub beta: f64,
    pub delta: f64,
    pub warp: f64,
}

impl Default for ScalesSection {
    fn default() -> Self {
        let p = ProposalScales::default();
        ScalesSection {
            beta: p.beta,
            delta: p.delta,
            warp: p.warp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BneRunConfig {
    pub train: PathBuf,
    pub query: PathBuf,
    #[serde(default = "one")]
    pub prior_beta_variance: f64,
    pub noise_variance: f64,
    #[serde(default = "default_kernel_delta")]
    pub kernel_delta: Kernel,
    #[serde(default = "default_kernel_g")]
    pub kernel_g: Kernel,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub knots: KnotSpec,
    #[serde(default = "default_warp_points")]
    pub warp_points: Vec<f64>,
    #[serde(default)]
    pub sampler: SamplerSection,
}

fn default_kernel_delta() -> Kernel {
    Kernel::Rbf {
        signal_variance: 0.5,
        lengthscale: 0.5,
    }
}

fn default_kernel_g() -> Kernel {
    Kernel::Rbf {
        signal_variance: 0.1,
        lengthscale: 1.5,
    }
}

fn default_warp_points() -> Vec<f64> {
    uqd_core::bne::linspace(-3.0, 3.0, 7)
}

impl BneRunConfig {
    /// Core configuration for the full regime, given the resolved grid and knots.
    pub fn to_core(&self, y_grid: Vec<f64>, knots: uqd_core::Mat) -> BneConfig {
        let s = &self.sampler;
        BneConfig {
            prior_beta_variance: self.prior_beta_variance,
            kernel_delta: self.kernel_delta,
            kernel_g: self.kernel_g,
            noise_variance: self.noise_variance,
            y_grid,
            knots,
            warp_points: self.warp_points.clone(),
            sampler: SamplerConfig {
                n_samples: s.n_samples,
                burn_in: s.burn_in,
                proposal_scales: ProposalScales {
                    beta: s.proposal_scales.beta,
                    delta: s.proposal_scales.delta,
                    warp: s.proposal_scales.warp,
                },
                seed: s.seed,
                adapt: s.adapt,
            },
            nesting: Nesting::M2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn flags_override_file_and_tables_merge() {
        let mut base = json!({"a": 1, "t": {"x": 1, "y": 2}});
        merge(&mut base, json!({"a": 5, "t": {"y": 3}}));
        assert_eq!(base, json!({"a": 5, "t": {"x": 1, "y": 3}}));
    }

    #[test]
    fn dotted_paths_create_tables() {
        let mut v = json!({});
        set_path(&mut v, "sampler.seed", json!(7));
        set_path(&mut v, "sampler.n_samples", json!(200));
        assert_eq!(v, json!({"sampler": {"seed": 7, "n_samples": 200}}));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r: CliResult<GpConfig> = resolve(
            None,
            json!({"train": "a.csv", "noise_variance": 0.1, "lenghtscale": 2.0}),
        );
        assert!(matches!(r, Err(CliError::Config(m)) if m.contains("lenghtscale")));
        let r: CliResult<BneRunConfig> = resolve(
            None,
            json!({"train": "a", "query": "b", "noise_variance": 0.1, "sampler": {"seeed": 1}}),
        );
        assert!(r.is_err());
        let r: CliResult<BneRunConfig> = resolve(
            None,
            json!({"train": "a", "query": "b", "noise_variance": 0.1,
                   "kernel_delta": {"kind": "rbf", "signal_variance": 1.0, "lengthscale": 1.0, "bias": 0.0}}),
        );
        assert!(r.is_err());
    }

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "train = \"t.csv\"\nnoise_variance = 0.5\nlengthscale = 2.0\n").unwrap();
        let c: GpConfig = resolve(Some(&p), json!({"noise_variance": 0.25})).unwrap();
        assert_eq!(c.noise_variance, 0.25);
        assert_eq!(c.lengthscale, Some(2.0));
        assert_eq!(c.kernel, KernelName::Rbf);
    }

    #[test]
    fn kernel_options_must_match_kind() {
        let mut c: GpConfig = resolve(None, json!({"train": "t", "noise_variance": 0.1, "lengthscale": -1.0})).unwrap();
        assert!(matches!(c.kernel(), Err(CliError::Core(_))));
        c.lengthscale = None;
        c.kernel = KernelName::Linear;
        c.bias = Some(0.5);
        assert!(c.kernel().is_ok());
        c.lengthscale = Some(1.0);
        assert!(matches!(c.kernel(), Err(CliError::Config(_))));
    }
}
