use serde::{Deserialize, Serialize};

use super::config::{BneConfig, BneData, BneQuery, Nesting};
use super::isotonic::isotonic_nondecreasing;
use crate::entropy::ProbVector;
use crate::error::{Result, UqError};
use crate::gp::gram;
use crate::likelihood::LogLik;
use crate::numkit::{cholesky_with_jitter, dot, std_normal_cdf, CholeskyFactor, Mat, DEFAULT_JITTER_START};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
/// A cell holding at least this much mass counts as holding all of it.
const DEGENERATE_MASS: f64 = 1.0 - 1e-12;

/// One joint draw of ensemble weights, residual-process knot values and warp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BneState {
    pub beta: Vec<f64>,
    /// `δ` at the configured knots; all zero under `M0`.
    pub delta_knots: Vec<f64>,
    /// `g` at the configured warp points; equal to the points themselves
    /// (identity) under `M0` and `M1`.
    pub g_warp: Vec<f64>,
}

impl BneState {
    /// `δ ≡ 0`, `G = I`.
    pub fn base(config: &BneConfig, beta: Vec<f64>) -> BneState {
        BneState {
            beta,
            delta_knots: vec![0.0; config.knots.rows()],
            g_warp: config.warp_points.clone(),
        }
    }

    pub fn warp_is_identity(&self, config: &BneConfig) -> bool {
        self.g_warp == config.warp_points
    }

    fn validate(&self, config: &BneConfig, k: usize) -> Result<()> {
        if self.beta.len() != k {
            return Err(UqError::DimensionMismatch {
                context: "state beta",
                expected: k,
                found: self.beta.len(),
            });
        }
        if self.delta_knots.len() != config.knots.rows() {
            return Err(UqError::DimensionMismatch {
                context: "state delta_knots",
                expected: config.knots.rows(),
                found: self.delta_knots.len(),
            });
        }
        if self.g_warp.len() != config.warp_points.len() {
            return Err(UqError::DimensionMismatch {
                context: "state g_warp",
                expected: config.warp_points.len(),
                found: self.g_warp.len(),
            });
        }
        let all = self.beta.iter().chain(&self.delta_knots).chain(&self.g_warp);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(UqError::NonFiniteEvaluation("state has non-finite entries".into()));
        }
        if !config.nesting.has_delta() && self.delta_knots.iter().any(|&d| d != 0.0) {
            return Err(UqError::InvalidParameter(format!(
                "{:?} state must have δ ≡ 0",
                config.nesting
            )));
        }
        if !config.nesting.has_warp() && !self.warp_is_identity(config) {
            return Err(UqError::InvalidParameter(format!(
                "{:?} state must have G = I",
                config.nesting
            )));
        }
        Ok(())
    }
}

/// Config plus cached factorizations of the knot and warp prior covariances.
#[derive(Debug, Clone)]
pub struct BneModel {
    config: BneConfig,
    delta_factor: Option<CholeskyFactor>,
    warp_factor: Option<CholeskyFactor>,
}

impl BneModel {
    pub fn new(config: &BneConfig) -> Result<BneModel> {
        config.validate()?;
        let delta_factor = if config.knots.rows() > 0 {
            let k = gram(&config.kernel_delta, &config.knots, &config.knots)?;
            Some(cholesky_with_jitter(&k, DEFAULT_JITTER_START)?)
        } else {
            None
        };
        let warp_factor = if !config.warp_points.is_empty() {
            let w = Mat::column(&config.warp_points)?;
            let k = gram(&config.kernel_g, &w, &w)?;
            Some(cholesky_with_jitter(&k, DEFAULT_JITTER_START)?)
        } else {
            None
        };
        Ok(BneModel {
            config: config.clone(),
            delta_factor,
            warp_factor,
        })
    }

    pub fn config(&self) -> &BneConfig {
        &self.config
    }

    pub fn nesting(&self) -> Nesting {
        self.config.nesting
    }

    pub(crate) fn delta_factor(&self) -> Option<&CholeskyFactor> {
        self.delta_factor.as_ref()
    }

    pub(crate) fn warp_factor(&self) -> Option<&CholeskyFactor> {
        self.warp_factor.as_ref()
    }

    /// Weights `w` with `δ(x) = w · δ_knots` (the GP conditional mean given the knots).
    pub fn delta_weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        let Some(factor) = &self.delta_factor else {
            return Ok(vec![]);
        };
        let knots = &self.config.knots;
        if x.len() != knots.cols() {
            return Err(UqError::DimensionMismatch {
                context: "bne query dimension",
                expected: knots.cols(),
                found: x.len(),
            });
        }
        let k_zx: Vec<f64> = (0..knots.rows())
            .map(|i| self.config.kernel_delta.eval(knots.row(i), x))
            .collect();
        factor.solve_vec(&k_zx)
    }

    /// Location `μ = f(x)·β + δ(x)`.
    pub fn location(&self, state: &BneState, base: &[f64], delta_weights: &[f64]) -> f64 {
        let mut mu = dot(base, &state.beta);
        if self.config.nesting.has_delta() {
            mu += dot(delta_weights, &state.delta_knots);
        }
        mu
    }

    /// Warped, projected and pinned CDF values at every grid edge.
    pub fn edge_cdf(&self, state: &BneState, mu: f64) -> Vec<f64> {
        let sd = self.config.noise_sd();
        let grid = &self.config.y_grid;
        let identity = !self.config.nesting.has_warp() || state.warp_is_identity(&self.config);
        let raw: Vec<f64> = grid
            .iter()
            .map(|&y| {
                let z = (y - mu) / sd;
                if identity {
                    std_normal_cdf(z)
                } else {
                    std_normal_cdf(self.warp(state, z))
                }
            })
            .collect();
        let mut v = isotonic_nondecreasing(&raw);
        for p in v.iter_mut() {
            *p = p.clamp(0.0, 1.0);
        }
        let last = v.len() - 1;
        v[0] = 0.0;
        v[last] = 1.0;
        v
    }

    /// `g(z) = z + r(z)`, with `r` interpolated linearly between warp points
    /// and held constant beyond them.
    fn warp(&self, state: &BneState, z: f64) -> f64 {
        let pts = &self.config.warp_points;
        let resid = |i: usize| state.g_warp[i] - pts[i];
        let n = pts.len();
        let r = if z <= pts[0] {
            resid(0)
        } else if z >= pts[n - 1] {
            resid(n - 1)
        } else {
            let hi = pts.partition_point(|&p| p <= z);
            let lo = hi - 1;
            let t = (z - pts[lo]) / (pts[hi] - pts[lo]);
            resid(lo) + t * (resid(hi) - resid(lo))
        };
        z + r
    }

    /// Cell masses over the y-grid for one state at one query.
    pub fn member_predictive(&self, state: &BneState, query: &BneQuery) -> Result<ProbVector> {
        state.validate(&self.config, query.base.len())?;
        let weights = self.delta_weights(&query.x)?;
        self.member_predictive_with(state, &query.base, &weights)
    }

    pub(crate) fn member_predictive_with(
        &self,
        state: &BneState,
        base: &[f64],
        delta_weights: &[f64],
    ) -> Result<ProbVector> {
        let mu = self.location(state, base, delta_weights);
        if !mu.is_finite() {
            return Err(UqError::NonFiniteEvaluation(format!("predictive location {mu}")));
        }
        let v = self.edge_cdf(state, mu);
        let masses = cell_masses(&v);
        if let Some(cell) = masses.iter().position(|&m| m >= DEGENERATE_MASS) {
            return Err(UqError::DegenerateGrid { cell });
        }
        ProbVector::new(masses)
    }

    /// Log prior of the state's active blocks.
    pub fn log_prior(&self, state: &BneState) -> f64 {
        let tau2 = self.config.prior_beta_variance;
        let k = state.beta.len() as f64;
        let mut lp = -0.5 * state.beta.iter().map(|b| b * b).sum::<f64>() / tau2 - 0.5 * k * (LN_2PI + tau2.ln());
        if self.config.nesting.has_delta() {
            if let Some(f) = &self.delta_factor {
                lp += gaussian_log_density(f, &state.delta_knots);
            }
        }
        if self.config.nesting.has_warp() {
            if let Some(f) = &self.warp_factor {
                let resid: Vec<f64> = state
                    .g_warp
                    .iter()
                    .zip(&self.config.warp_points)
                    .map(|(g, w)| g - w)
                    .collect();
                lp += gaussian_log_density(f, &resid);
            }
        }
        lp
    }

    /// `Σᵢ log(mass of yᵢ's cell / cell width)`.
    pub fn log_likelihood(&self, state: &BneState, data: &PreparedData) -> LogLik {
        let grid = &self.config.y_grid;
        let mut total = 0.0;
        for i in 0..data.y.len() {
            let Some(cell) = data.cells[i] else {
                return LogLik::NegInfinity;
            };
            let base = data.base.row(i);
            let weights = data.delta_weights.as_ref().map_or(&[][..], |w| w.row(i));
            let mu = self.location(state, base, weights);
            let v = self.edge_cdf(state, mu);
            let mass = v[cell + 1] - v[cell];
            if !(mass > 0.0) {
                return LogLik::NegInfinity;
            }
            total += log_density_from_mass(mass, grid[cell + 1] - grid[cell]);
        }
        LogLik::Finite(total)
    }

    pub fn log_density(&self, state: &BneState, data: &PreparedData) -> Result<LogLik> {
        state.validate(&self.config, data.base.cols())?;
        let ll = self.log_likelihood(state, data);
        let lp = self.log_prior(state);
        match ll {
            LogLik::NegInfinity => Ok(LogLik::NegInfinity),
            LogLik::Finite(v) => {
                let total = v + lp;
                if total.is_finite() {
                    Ok(LogLik::Finite(total))
                } else {
                    Err(UqError::NonFiniteEvaluation(format!("log density {total}")))
                }
            }
        }
    }

    /// Caches grid cells and residual-process weights for the training rows.
    pub fn prepare(&self, data: &BneData) -> Result<PreparedData> {
        let grid = &self.config.y_grid;
        let cells = data.y.iter().map(|&y| grid_cell(grid, y)).collect();
        let delta_weights = if self.config.nesting.has_delta() {
            let n = data.len();
            let m = self.config.knots.rows();
            let mut w = Mat::zeros(n, m);
            for i in 0..n {
                for (j, v) in self.delta_weights(data.x.row(i))?.into_iter().enumerate() {
                    w[(i, j)] = v;
                }
            }
            Some(w)
        } else {
            None
        };
        Ok(PreparedData {
            y: data.y.clone(),
            base: data.base.clone(),
            cells,
            delta_weights,
        })
    }
}

/// Training data with per-row grid cells and `δ` interpolation weights.
#[derive(Debug, Clone)]
pub struct PreparedData {
    y: Vec<f64>,
    base: Mat,
    cells: Vec<Option<usize>>,
    delta_weights: Option<Mat>,
}

impl PreparedData {
    pub fn base(&self) -> &Mat {
        &self.base
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

/// Index `c` with `grid[c] ≤ y < grid[c+1]` (the last edge closes the last cell).
pub fn grid_cell(grid: &[f64], y: f64) -> Option<usize> {
    let n = grid.len();
    if n < 2 || !(y >= grid[0] && y <= grid[n - 1]) {
        return None;
    }
    let idx = grid.partition_point(|&e| e <= y);
    Some(idx.saturating_sub(1).min(n - 2))
}

/// Differences of consecutive CDF values.
pub fn cell_masses(edge_cdf: &[f64]) -> Vec<f64> {
    edge_cdf.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Log of a piecewise-constant density: `log(mass / width)`.
pub fn log_density_from_mass(mass: f64, width: f64) -> f64 {
    mass.ln() - width.ln()
}

fn gaussian_log_density(factor: &CholeskyFactor, x: &[f64]) -> f64 {
    let mut z = x.to_vec();
    factor.forward_substitute(&mut z);
    -0.5 * dot(&z, &z) - 0.5 * factor.log_det() - 0.5 * x.len() as f64 * LN_2PI
}

/// Member predictive of one state at one query.
pub fn bne_member_predictive(state: &BneState, config: &BneConfig, query: &BneQuery) -> Result<ProbVector> {
    BneModel::new(config)?.member_predictive(state, query)
}

/// Log prior plus discretized log-likelihood of the training data.
pub fn bne_log_density(state: &BneState, config: &BneConfig, data: &BneData) -> Result<LogLik> {
    let model = BneModel::new(config)?;
    let prepared = model.prepare(data)?;
    model.log_density(state, &prepared)
}
