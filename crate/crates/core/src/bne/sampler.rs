use serde::{Deserialize, Serialize};

use super::config::{BneConfig, BneData, Nesting, ProposalScales};
use super::model::{BneModel, BneState};
use crate::error::{Result, UqError};
use crate::likelihood::LogLik;
use crate::numkit::{cholesky_with_jitter, CholeskyFactor, RngStream, DEFAULT_JITTER_START};

/// Blocks whose post-burn-in acceptance falls below this are reported as diverged.
pub const MIN_ACCEPTANCE: f64 = 0.01;
const ADAPT_WINDOW: usize = 25;
const TARGET_ACCEPTANCE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    Beta,
    Delta,
    Warp,
}

impl Block {
    pub fn name(self) -> &'static str {
        match self {
            Block::Beta => "beta",
            Block::Delta => "delta",
            Block::Warp => "warp",
        }
    }

    fn active(nesting: Nesting) -> Vec<Block> {
        let mut blocks = vec![Block::Beta];
        if nesting.has_delta() {
            blocks.push(Block::Delta);
        }
        if nesting.has_warp() {
            blocks.push(Block::Warp);
        }
        blocks
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockAcceptance {
    pub block: Block,
    pub rate: f64,
    /// Proposal scale in effect after burn-in.
    pub scale: f64,
}

/// Retained posterior draws for one nesting regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnePosterior {
    pub nesting: Nesting,
    pub states: Vec<BneState>,
    /// Mean post-burn-in acceptance over active blocks; `None` for
    /// hand-assembled posteriors.
    pub acceptance_rate: Option<f64>,
    pub blocks: Vec<BlockAcceptance>,
}

impl BnePosterior {
    /// Wraps externally supplied states (no sampler diagnostics).
    pub fn from_states(nesting: Nesting, states: Vec<BneState>) -> Result<BnePosterior> {
        if states.is_empty() {
            return Err(UqError::InvalidParameter("posterior has no states".into()));
        }
        Ok(BnePosterior {
            nesting,
            states,
            acceptance_rate: None,
            blocks: vec![],
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Posterior mean and standard deviation of one coordinate.
    pub fn moments(&self, pick: impl Fn(&BneState) -> f64) -> (f64, f64) {
        let n = self.states.len() as f64;
        let mean = self.states.iter().map(&pick).sum::<f64>() / n;
        let var = self.states.iter().map(|s| (pick(s) - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    }
}

/// Blocked random-walk Metropolis over `β`, the knot values of `δ`, and the
/// warp residual. `δ` and warp proposals are correlated like their priors.
pub fn bne_sample_posterior(config: &BneConfig, data: &BneData) -> Result<BnePosterior> {
    let mut rng = RngStream::new(config.sampler.seed, config.nesting.stream_id());
    sample_with_stream(config, data, &mut rng)
}

pub(crate) fn sample_with_stream(config: &BneConfig, data: &BneData, rng: &mut RngStream) -> Result<BnePosterior> {
    let model = BneModel::new(config)?;
    let k = data.n_predictors();
    if data.len() < k {
        return Err(UqError::InvalidConfig(format!(
            "need at least as many training rows ({}) as base predictors ({k})",
            data.len()
        )));
    }
    if data.x.cols() != config.knots.cols() && config.nesting.has_delta() {
        return Err(UqError::DimensionMismatch {
            context: "knot dimension",
            expected: data.x.cols(),
            found: config.knots.cols(),
        });
    }
    config.check_grid_covers(&data.y)?;
    let prepared = model.prepare(data)?;

    let mut state = BneState::base(config, ridge_start(config, data)?);
    let mut current = match model.log_density(&state, &prepared)? {
        LogLik::Finite(v) => v,
        LogLik::NegInfinity => {
            return Err(UqError::NonFiniteEvaluation(
                "initial state has zero likelihood on the y-grid".into(),
            ))
        }
    };

    let blocks = Block::active(config.nesting);
    let mut scales = config.sampler.proposal_scales;
    let burn_in = config.sampler.burn_in();
    let total_iters = burn_in + config.sampler.n_samples;
    let mut window_accepts = vec![0usize; blocks.len()];
    let mut kept_accepts = vec![0usize; blocks.len()];
    let mut states = Vec::with_capacity(config.sampler.n_samples);

    for iter in 0..total_iters {
        for (b, &block) in blocks.iter().enumerate() {
            let proposal = propose(&model, &state, block, scale_of(&scales, block), rng);
            let accepted = match model.log_density(&proposal, &prepared)? {
                LogLik::Finite(lp) => {
                    let log_u = rng.uniform().ln();
                    if log_u < lp - current {
                        state = proposal;
                        current = lp;
                        true
                    } else {
                        false
                    }
                }
                LogLik::NegInfinity => {
                    // keep the stream aligned regardless of outcome
                    rng.uniform();
                    false
                }
            };
            if iter < burn_in {
                window_accepts[b] += accepted as usize;
            } else {
                kept_accepts[b] += accepted as usize;
            }
        }
        if config.sampler.adapt && iter < burn_in && (iter + 1) % ADAPT_WINDOW == 0 {
            for (b, &block) in blocks.iter().enumerate() {
                let rate = window_accepts[b] as f64 / ADAPT_WINDOW as f64;
                let s = scale_mut(&mut scales, block);
                *s *= (2.0 * (rate - TARGET_ACCEPTANCE)).exp();
                window_accepts[b] = 0;
            }
        }
        if iter >= burn_in {
            states.push(state.clone());
        }
    }

    let kept = config.sampler.n_samples as f64;
    let block_stats: Vec<BlockAcceptance> = blocks
        .iter()
        .zip(&kept_accepts)
        .map(|(&block, &acc)| BlockAcceptance {
            block,
            rate: acc as f64 / kept,
            scale: scale_of(&scales, block),
        })
        .collect();
    if let Some(worst) = block_stats.iter().find(|b| b.rate < MIN_ACCEPTANCE) {
        return Err(UqError::SamplerDiverged {
            block: worst.block.name(),
            rate: worst.rate,
        });
    }
    let acceptance_rate = block_stats.iter().map(|b| b.rate).sum::<f64>() / block_stats.len() as f64;
    Ok(BnePosterior {
        nesting: config.nesting,
        states,
        acceptance_rate: Some(acceptance_rate),
        blocks: block_stats,
    })
}

fn scale_of(scales: &ProposalScales, block: Block) -> f64 {
    match block {
        Block::Beta => scales.beta,
        Block::Delta => scales.delta,
        Block::Warp => scales.warp,
    }
}

fn scale_mut(scales: &mut ProposalScales, block: Block) -> &mut f64 {
    match block {
        Block::Beta => &mut scales.beta,
        Block::Delta => &mut scales.delta,
        Block::Warp => &mut scales.warp,
    }
}

fn propose(model: &BneModel, state: &BneState, block: Block, scale: f64, rng: &mut RngStream) -> BneState {
    let mut next = state.clone();
    match block {
        Block::Beta => {
            for b in next.beta.iter_mut() {
                *b += scale * rng.standard_normal();
            }
        }
        Block::Delta => {
            let step = correlated_step(model.delta_factor(), next.delta_knots.len(), rng);
            for (d, s) in next.delta_knots.iter_mut().zip(step) {
                *d += scale * s;
            }
        }
        Block::Warp => {
            let step = correlated_step(model.warp_factor(), next.g_warp.len(), rng);
            for (g, s) in next.g_warp.iter_mut().zip(step) {
                *g += scale * s;
            }
        }
    }
    next
}

fn correlated_step(factor: Option<&CholeskyFactor>, n: usize, rng: &mut RngStream) -> Vec<f64> {
    let z = rng.standard_normals(n);
    match factor {
        Some(f) => f.lower().matvec(&z).expect("factor matches block size"),
        None => z,
    }
}

/// Ridge solution `(FᵀF + σ²/τ² I)⁻¹ Fᵀ y`, the Gaussian posterior mean of β.
fn ridge_start(config: &BneConfig, data: &BneData) -> Result<Vec<f64>> {
    let f = &data.base;
    let ft = f.transpose();
    let gram = ft
        .matmul(f)?
        .add_diagonal(config.noise_variance / config.prior_beta_variance);
    let rhs = ft.matvec(&data.y)?;
    let factor = cholesky_with_jitter(&gram, DEFAULT_JITTER_START)?;
    factor.solve_vec(&rhs)
}
