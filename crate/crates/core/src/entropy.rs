//! Entropy-based decomposition over finite-label posterior ensembles:
//! predictive entropy = expected member entropy + mutual information.
//! All quantities are in bits.

use serde::{Deserialize, Serialize};

use crate::error::{Result, UqError};
use crate::report::UncertaintyReport;

/// Largest deviation of a probability sum from 1 that is silently renormalized.
pub const NORMALIZATION_TOL: f64 = 1e-9;

pub const SINGLE_MEMBER_NOTE: &str =
    "single-member ensemble: epistemic uncertainty is not identifiable and is reported as 0";

/// A discrete distribution over `C ≥ 1` labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Validates and renormalizes; sums off by more than 1e-9 are rejected.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(UqError::InvalidProbVector("no labels".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(UqError::InvalidProbVector(format!("entry {p} is not a probability")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(UqError::InvalidProbVector(format!("entries sum to {sum}")));
        }
        Ok(ProbVector(renormalize(probs, sum)))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Already-normalized masses produced inside the crate.
    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        ProbVector(probs)
    }
}

fn renormalize(mut probs: Vec<f64>, sum: f64) -> Vec<f64> {
    if sum != 1.0 {
        probs.iter_mut().for_each(|p| *p /= sum);
    }
    probs
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = UqError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ProbVector::new(v)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Vec<f64> {
        p.0
    }
}

/// `M ≥ 1` member predictives over one label set, with member weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorEnsemble {
    members: Vec<ProbVector>,
    weights: Vec<f64>,
}

impl PosteriorEnsemble {
    /// Uniformly weighted ensemble.
    pub fn uniform(members: Vec<ProbVector>) -> Result<Self> {
        let m = members.len();
        PosteriorEnsemble::weighted(members, vec![1.0 / m.max(1) as f64; m])
    }

    /// Weights must be nonnegative and sum to 1 within 1e-9.
    pub fn weighted(members: Vec<ProbVector>, weights: Vec<f64>) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(UqError::InvalidProbVector("ensemble has no members".into()));
        };
        let c = first.len();
        if let Some(bad) = members.iter().find(|m| m.len() != c) {
            return Err(UqError::DimensionMismatch {
                context: "ensemble label count",
                expected: c,
                found: bad.len(),
            });
        }
        if weights.len() != members.len() {
            return Err(UqError::DimensionMismatch {
                context: "ensemble weights",
                expected: members.len(),
                found: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(UqError::InvalidProbVector(format!("member weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(UqError::InvalidProbVector(format!("member weights sum to {sum}")));
        }
        Ok(PosteriorEnsemble {
            members,
            weights: renormalize(weights, sum),
        })
    }

    pub fn members(&self) -> &[ProbVector] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    pub fn n_labels(&self) -> usize {
        self.members[0].len()
    }

    fn active(&self) -> impl Iterator<Item = (&ProbVector, f64)> {
        self.members
            .iter()
            .zip(self.weights.iter().copied())
            .filter(|(_, w)| *w > 0.0)
    }

    fn single_distinct_member(&self) -> Option<&ProbVector> {
        let mut active = self.active().map(|(m, _)| m);
        let first = active.next()?;
        active.all(|m| m == first).then_some(first)
    }
}

/// Weighted average of the members.
pub fn predictive_mixture(ens: &PosteriorEnsemble) -> ProbVector {
    if let Some(only) = ens.single_distinct_member() {
        return only.clone();
    }
    let mut mix = vec![0.0; ens.n_labels()];
    for (member, w) in ens.active() {
        for (acc, p) in mix.iter_mut().zip(member.probs()) {
            *acc += w * p;
        }
    }
    let sum: f64 = mix.iter().sum();
    ProbVector::from_normalized(renormalize(mix, sum))
}

/// Shannon entropy in bits, `0 log 0 = 0`.
pub fn entropy(p: &ProbVector) -> f64 {
    p.probs()
        .iter()
        .filter(|&&q| q > 0.0)
        .map(|&q| -(q * q.log2()))
        .fold(0.0, |acc, t| acc + t)
}

/// Weighted average of member entropies.
pub fn expected_conditional_entropy(ens: &PosteriorEnsemble) -> f64 {
    if let Some(only) = ens.single_distinct_member() {
        return entropy(only);
    }
    ens.active().map(|(m, w)| w * entropy(m)).sum()
}

/// `H(mixture) - E[H(member)]`.
pub fn mutual_information(ens: &PosteriorEnsemble) -> f64 {
    decompose(ens).epistemic
}

/// Total / aleatoric / epistemic in bits; the structural fields stay unset.
pub fn decompose(ens: &PosteriorEnsemble) -> UncertaintyReport {
    let total = entropy(&predictive_mixture(ens));
    let aleatoric = expected_conditional_entropy(ens);
    let mut report = UncertaintyReport::from_total_and_aleatoric(total, aleatoric);
    if ens.n_members() == 1 {
        report.note = Some(SINGLE_MEMBER_NOTE.to_string());
    }
    report
}
