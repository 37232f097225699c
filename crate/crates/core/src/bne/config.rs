use serde::{Deserialize, Serialize};

use crate::error::{Result, UqError};
use crate::gp::Kernel;
use crate::numkit::Mat;

/// Smallest accepted number of y-grid edges.
pub const MIN_GRID_EDGES: usize = 16;
/// Smallest accepted number of retained posterior draws.
pub const MIN_POSTERIOR_SAMPLES: usize = 100;
/// The y-grid must reach this many noise standard deviations past the data.
pub const GRID_COVERAGE_SDS: f64 = 3.0;

/// Which augmentations are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Nesting {
    /// Base ensemble only: `δ = 0`, `G = I`.
    M0,
    /// Adds the residual process `δ`; `G = I`.
    M1,
    /// Adds the distributional warp `G`.
    M2,
}

impl Nesting {
    pub const ALL: [Nesting; 3] = [Nesting::M0, Nesting::M1, Nesting::M2];

    pub fn has_delta(self) -> bool {
        self != Nesting::M0
    }

    pub fn has_warp(self) -> bool {
        self == Nesting::M2
    }

    pub(crate) fn stream_id(self) -> u64 {
        match self {
            Nesting::M0 => 0,
            Nesting::M1 => 1,
            Nesting::M2 => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProposalScales {
    pub beta: f64,
    pub delta: f64,
    pub warp: f64,
}

impl Default for ProposalScales {
    fn default() -> Self {
        ProposalScales {
            beta: 0.05,
            delta: 0.2,
            warp: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Draws kept after burn-in.
    pub n_samples: usize,
    /// Defaults to `n_samples / 2`.
    pub burn_in: Option<usize>,
    pub proposal_scales: ProposalScales,
    pub seed: u64,
    /// Tune proposal scales toward ~30% acceptance during burn-in only.
    pub adapt: bool,
}

impl SamplerConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        SamplerConfig {
            n_samples,
            burn_in: None,
            proposal_scales: ProposalScales::default(),
            seed,
            adapt: true,
        }
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.n_samples / 2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BneConfig {
    /// Prior variance `τ²` of each ensemble weight.
    pub prior_beta_variance: f64,
    /// Prior covariance of the residual process over x.
    pub kernel_delta: Kernel,
    /// Prior covariance of the warp residual over the probit scale.
    pub kernel_g: Kernel,
    pub noise_variance: f64,
    /// Strictly increasing cell edges for the discretized outcome.
    pub y_grid: Vec<f64>,
    /// x-locations (rows) where the residual process is represented.
    pub knots: Mat,
    /// Strictly increasing probit-scale locations where the warp is represented.
    pub warp_points: Vec<f64>,
    pub sampler: SamplerConfig,
    pub nesting: Nesting,
}

impl BneConfig {
    pub fn noise_sd(&self) -> f64 {
        self.noise_variance.sqrt()
    }

    pub fn with_nesting(&self, nesting: Nesting) -> BneConfig {
        BneConfig {
            nesting,
            ..self.clone()
        }
    }

    pub fn n_cells(&self) -> usize {
        self.y_grid.len() - 1
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(UqError::InvalidConfig(msg));
        if !(self.prior_beta_variance > 0.0) || !self.prior_beta_variance.is_finite() {
            return bad(format!(
                "prior_beta_variance must be positive, got {}",
                self.prior_beta_variance
            ));
        }
        if !(self.noise_variance > 0.0) || !self.noise_variance.is_finite() {
            return bad(format!("noise_variance must be positive, got {}", self.noise_variance));
        }
        self.kernel_delta.validated()?;
        self.kernel_g.validated()?;
        if self.y_grid.len() < MIN_GRID_EDGES {
            return bad(format!(
                "y_grid needs at least {MIN_GRID_EDGES} edges, got {}",
                self.y_grid.len()
            ));
        }
        if !strictly_increasing(&self.y_grid) {
            return bad("y_grid must be finite and strictly increasing".into());
        }
        if self.nesting.has_delta() && self.knots.rows() == 0 {
            return bad("the residual process needs at least one knot".into());
        }
        if self.nesting.has_warp() && (self.warp_points.len() < 2 || !strictly_increasing(&self.warp_points)) {
            return bad("warp_points must hold at least 2 strictly increasing values".into());
        }
        if self.sampler.n_samples < MIN_POSTERIOR_SAMPLES {
            return bad(format!(
                "n_samples must be at least {MIN_POSTERIOR_SAMPLES}, got {}",
                self.sampler.n_samples
            ));
        }
        let s = self.sampler.proposal_scales;
        if [s.beta, s.delta, s.warp].iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return bad(format!("proposal scales must be positive, got {s:?}"));
        }
        Ok(())
    }

    /// Checks that the grid reaches 3σ_ε beyond the observed targets.
    pub fn check_grid_covers(&self, y: &[f64]) -> Result<()> {
        let (lo, hi) = min_max(y);
        let pad = GRID_COVERAGE_SDS * self.noise_sd();
        let first = self.y_grid[0];
        let last = self.y_grid[self.y_grid.len() - 1];
        if first > lo - pad || last < hi + pad {
            return Err(UqError::InvalidConfig(format!(
                "y_grid [{first}, {last}] does not cover [{}, {}]",
                lo - pad,
                hi + pad
            )));
        }
        Ok(())
    }
}

/// `n` equally spaced edges spanning the targets padded by `pad_sds` noise
/// standard deviations on each side.
pub fn grid_for_targets(y: &[f64], noise_sd: f64, pad_sds: f64, n: usize) -> Vec<f64> {
    let (lo, hi) = min_max(y);
    linspace(lo - pad_sds * noise_sd, hi + pad_sds * noise_sd, n)
}

pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => {
            let step = (end - start) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { end } else { start + step * i as f64 })
                .collect()
        }
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[0] < w[1])
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    })
}

/// Training inputs, targets, and base-predictor outputs at each training row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BneData {
    pub x: Mat,
    pub y: Vec<f64>,
    /// `N × K` matrix of `f_k(x_i)`.
    pub base: Mat,
}

impl BneData {
    pub fn new(x: Mat, y: Vec<f64>, base: Mat) -> Result<Self> {
        if x.rows() != y.len() || base.rows() != y.len() {
            return Err(UqError::DimensionMismatch {
                context: "bne training rows",
                expected: y.len(),
                found: if x.rows() != y.len() { x.rows() } else { base.rows() },
            });
        }
        if base.cols() == 0 {
            return Err(UqError::InvalidConfig("at least one base predictor is required".into()));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(UqError::NonFiniteEvaluation(format!("target row {i}")));
        }
        Ok(BneData { x, y, base })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_predictors(&self) -> usize {
        self.base.cols()
    }
}

/// A query location with the base predictors tabulated there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BneQuery {
    pub x: Vec<f64>,
    pub base: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_hits_endpoints() {
        let v = linspace(-1.0, 2.0, 7);
        assert_eq!(v.len(), 7);
        assert_eq!(v[0], -1.0);
        assert_eq!(v[6], 2.0);
        assert!(strictly_increasing(&v));
    }

    #[test]
    fn grid_coverage_check() {
        let cfg = super::super::tests::toy_config(Nesting::M0);
        assert!(cfg.check_grid_covers(&[0.0]).is_ok());
        assert!(cfg.check_grid_covers(&[100.0]).is_err());
    }

    #[test]
    fn validation_catches_short_grid_and_few_samples() {
        let mut cfg = super::super::tests::toy_config(Nesting::M0);
        cfg.y_grid.truncate(10);
        assert!(matches!(cfg.validate(), Err(UqError::InvalidConfig(_))));
        let mut cfg = super::super::tests::toy_config(Nesting::M0);
        cfg.sampler.n_samples = 10;
        assert!(cfg.validate().is_err());
        let mut cfg = super::super::tests::toy_config(Nesting::M1);
        cfg.knots = Mat::zeros(0, 1);
        assert!(cfg.validate().is_err());
    }
}
