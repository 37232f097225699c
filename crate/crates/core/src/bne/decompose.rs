use serde::{Deserialize, Serialize};

use super::config::{BneConfig, BneData, BneQuery, Nesting};
use super::model::BneModel;
use super::sampler::{bne_sample_posterior, BnePosterior};
use crate::entropy::{self, PosteriorEnsemble};
use crate::error::{Result, UqError};
use crate::report::UncertaintyReport;

/// Posteriors of the three nested regimes fitted to the same data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedPosteriors {
    pub m0: BnePosterior,
    pub m1: BnePosterior,
    pub m2: BnePosterior,
}

impl NestedPosteriors {
    pub fn get(&self, nesting: Nesting) -> &BnePosterior {
        match nesting {
            Nesting::M0 => &self.m0,
            Nesting::M1 => &self.m1,
            Nesting::M2 => &self.m2,
        }
    }
}

/// Fits M0, M1 and M2 concurrently. Each regime draws from its own stream
/// of the shared seed, so the result does not depend on scheduling.
pub fn sample_nested(config: &BneConfig, data: &BneData) -> Result<NestedPosteriors> {
    let [c0, c1, c2] = Nesting::ALL.map(|n| config.with_nesting(n));
    let (r0, r1, r2) = std::thread::scope(|s| {
        let h0 = s.spawn(|| bne_sample_posterior(&c0, data));
        let h1 = s.spawn(|| bne_sample_posterior(&c1, data));
        let r2 = bne_sample_posterior(&c2, data);
        (join(h0), join(h1), r2)
    });
    Ok(NestedPosteriors {
        m0: r0?,
        m1: r1?,
        m2: r2?,
    })
}

fn join(h: std::thread::ScopedJoinHandle<'_, Result<BnePosterior>>) -> Result<BnePosterior> {
    h.join().unwrap_or_else(|p| std::panic::resume_unwind(p))
}

/// Member predictives of every posterior state at `query`, uniformly weighted.
pub fn posterior_ensemble(posterior: &BnePosterior, config: &BneConfig, query: &BneQuery) -> Result<PosteriorEnsemble> {
    let model = BneModel::new(&config.with_nesting(posterior.nesting))?;
    let weights = model.delta_weights(&query.x)?;
    let members = posterior
        .states
        .iter()
        .map(|s| {
            if s.beta.len() != query.base.len() {
                return Err(UqError::DimensionMismatch {
                    context: "query base predictors",
                    expected: s.beta.len(),
                    found: query.base.len(),
                });
            }
            model.member_predictive_with(s, &query.base, &weights)
        })
        .collect::<Result<Vec<_>>>()?;
    PosteriorEnsemble::uniform(members)
}

/// Total / aleatoric / epistemic (bits) over the y-grid at one query.
pub fn bne_decompose_total(
    posterior: &BnePosterior,
    config: &BneConfig,
    query: &BneQuery,
) -> Result<UncertaintyReport> {
    Ok(entropy::decompose(&posterior_ensemble(posterior, config, query)?))
}

/// Full six-field report: the first-level split comes from M2; the
/// epistemic part is split by telescoping the mutual information of M0 ⊂ M1 ⊂ M2.
pub fn bne_decompose_epistemic(
    posteriors: &NestedPosteriors,
    config: &BneConfig,
    query: &BneQuery,
) -> Result<UncertaintyReport> {
    let mi0 = bne_decompose_total(&posteriors.m0, config, query)?.epistemic;
    let mi1 = bne_decompose_total(&posteriors.m1, config, query)?.epistemic;
    let full = bne_decompose_total(&posteriors.m2, config, query)?;
    Ok(full.with_breakdown(mi0, mi1))
}

/// Mean of the predictive mixture over the y-grid cell midpoints.
pub fn predictive_mean(posterior: &BnePosterior, config: &BneConfig, query: &BneQuery) -> Result<f64> {
    let ens = posterior_ensemble(posterior, config, query)?;
    let mix = entropy::predictive_mixture(&ens);
    Ok(mix
        .probs()
        .iter()
        .zip(config.y_grid.windows(2))
        .map(|(p, w)| p * 0.5 * (w[0] + w[1]))
        .sum())
}
