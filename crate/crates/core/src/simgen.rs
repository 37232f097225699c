//! Seeded synthetic scenarios with known ground truth.
//!
//! Every point `i` is drawn from its own random stream `(seed, i)`, so a
//! dataset of `n` points is a prefix of the dataset of `n + k` points at the
//! same seed.
//!
//! Default layouts (the artifact's own choices):
//!
//! - `Fig3aRegression`: `y = sin(1.5 x) + 0.3 x` on `[-3, 3]`; noise sd 0.6 on
//!   `[-3, -0.5)`, 0.1 on `[1, 3]`, and no points in the gap `[-0.5, 1)`.
//! - `Fig3bClassification`: two isotropic 2-D clouds with means `(∓1, 0)` and
//!   sd 0.7, rejecting draws in the empty box `[-1, 1] × [2.5, 4.5]`.
//! - `Fig7GpDemo`: `y = sin(x) + 0.5 cos(2x)` plus N(0, 0.2²) noise with
//!   `x = -3 + 6 √u`, so observations are sparse on the left.
//! - `ResidualBump`: `y = x + 1.5 exp(-(x - 1)² / 0.08)` plus N(0, 0.3²) noise.
//!   Only the first half of the bump window `[0.5, 1.5]` receives points. The
//!   linear part is the base predictor and the bump is the residual.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::entropy::{PosteriorEnsemble, ProbVector};
use crate::error::{Result, UqError};
use crate::likelihood::{mle_fit, ParametricFamily, Sample};
use crate::numkit::{Mat, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    #[serde(rename = "fig3a")]
    Fig3aRegression,
    #[serde(rename = "fig3b")]
    Fig3bClassification,
    #[serde(rename = "fig7")]
    Fig7GpDemo,
    #[serde(rename = "bump")]
    ResidualBump,
}

impl ScenarioKind {
    pub fn parse(name: &str) -> Option<ScenarioKind> {
        match name {
            "fig3a" => Some(ScenarioKind::Fig3aRegression),
            "fig3b" => Some(ScenarioKind::Fig3bClassification),
            "fig7" => Some(ScenarioKind::Fig7GpDemo),
            "bump" => Some(ScenarioKind::ResidualBump),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Fig3aRegression => "fig3a",
            ScenarioKind::Fig3bClassification => "fig3b",
            ScenarioKind::Fig7GpDemo => "fig7",
            ScenarioKind::ResidualBump => "bump",
        }
    }

    pub fn is_classification(self) -> bool {
        self == ScenarioKind::Fig3bClassification
    }
}

/// Half-open interval `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
}

impl Span {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x < self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Axis-aligned 2-D box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x1: Span,
    pub x2: Span,
}

impl Region {
    pub fn contains(&self, p: &[f64]) -> bool {
        self.x1.contains(p[0]) && self.x2.contains(p[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTruth {
    /// `(region, noise sd)` pairs; x is drawn uniformly over their union.
    pub segments: Vec<(Span, f64)>,
    pub gap: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationTruth {
    pub means: [[f64; 2]; 2],
    pub sd: f64,
    pub empty_zone: Region,
    /// Accepted range for the fraction of points whose true class posterior
    /// lies in `(0.25, 0.75)`.
    pub overlap_band: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpTruth {
    pub center: f64,
    pub width: f64,
    pub height: f64,
    pub noise_sd: f64,
    pub range: Span,
    /// Sub-interval of the bump window that receives no points.
    pub sparse: Span,
}

/// Ground truth of a scenario. Estimators never see this directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrueParams {
    Regression(RegressionTruth),
    Classification(ClassificationTruth),
    Fig7 { noise_sd: f64, range: Span },
    Bump(BumpTruth),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub true_params: TrueParams,
    pub n_points: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, n_points: usize, seed: u64) -> Scenario {
        let true_params = match kind {
            ScenarioKind::Fig3aRegression => TrueParams::Regression(RegressionTruth {
                segments: vec![(Span { lo: -3.0, hi: -0.5 }, 0.6), (Span { lo: 1.0, hi: 3.0 }, 0.1)],
                gap: Span { lo: -0.5, hi: 1.0 },
            }),
            ScenarioKind::Fig3bClassification => TrueParams::Classification(ClassificationTruth {
                means: [[-1.0, 0.0], [1.0, 0.0]],
                sd: 0.7,
                empty_zone: Region {
                    x1: Span { lo: -1.0, hi: 1.0 },
                    x2: Span { lo: 2.5, hi: 4.5 },
                },
                overlap_band: (0.1, 0.4),
            }),
            ScenarioKind::Fig7GpDemo => TrueParams::Fig7 {
                noise_sd: 0.2,
                range: Span { lo: -3.0, hi: 3.0 },
            },
            ScenarioKind::ResidualBump => TrueParams::Bump(BumpTruth {
                center: 1.0,
                width: 0.2,
                height: 1.5,
                noise_sd: 0.3,
                range: Span { lo: -2.0, hi: 2.0 },
                sparse: Span { lo: 1.0, hi: 1.5 },
            }),
        };
        Scenario {
            kind,
            true_params,
            n_points,
            seed,
        }
    }

    /// Noise-free regression function, where one exists.
    pub fn true_function(&self, x: f64) -> Option<f64> {
        match &self.true_params {
            TrueParams::Regression(_) => Some(fig3a_trend(x)),
            TrueParams::Fig7 { .. } => Some(fig7_function(x)),
            TrueParams::Bump(b) => Some(x + bump(b, x)),
            TrueParams::Classification(_) => None,
        }
    }

    /// True `P(label = 1 | x)` for the classification scenario.
    pub fn class_posterior(&self, p: &[f64]) -> Option<f64> {
        let TrueParams::Classification(t) = &self.true_params else {
            return None;
        };
        let log_lik = |m: &[f64; 2]| -((p[0] - m[0]).powi(2) + (p[1] - m[1]).powi(2)) / (2.0 * t.sd * t.sd);
        let (l0, l1) = (log_lik(&t.means[0]), log_lik(&t.means[1]));
        Some(1.0 / (1.0 + (l0 - l1).exp()))
    }
}

fn fig3a_trend(x: f64) -> f64 {
    (1.5 * x).sin() + 0.3 * x
}

fn fig7_function(x: f64) -> f64 {
    x.sin() + 0.5 * (2.0 * x).cos()
}

fn bump(b: &BumpTruth, x: f64) -> f64 {
    b.height * (-(x - b.center).powi(2) / (2.0 * b.width * b.width)).exp()
}

/// Draws the scenario's dataset. Regression schemas are `x,y`; the
/// classification schema is `x1,x2,label`.
pub fn generate(scenario: &Scenario) -> Dataset {
    let n = scenario.n_points;
    let mut xs = Vec::with_capacity(n * 2);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = RngStream::new(scenario.seed, i as u64);
        match &scenario.true_params {
            TrueParams::Regression(t) => {
                let total: f64 = t.segments.iter().map(|(s, _)| s.width()).sum();
                let mut u = rng.uniform() * total;
                let (span, sd) = t
                    .segments
                    .iter()
                    .find(|(s, _)| {
                        let hit = u < s.width();
                        if !hit {
                            u -= s.width();
                        }
                        hit
                    })
                    .copied()
                    .unwrap_or(*t.segments.last().expect("segments"));
                let x = (span.lo + u.min(span.width())).min(span.hi - 1e-12);
                xs.push(x);
                ys.push(fig3a_trend(x) + sd * rng.standard_normal());
            }
            TrueParams::Classification(t) => {
                let label = rng.index(2);
                let m = t.means[label];
                let p = loop {
                    let p = [m[0] + t.sd * rng.standard_normal(), m[1] + t.sd * rng.standard_normal()];
                    if !t.empty_zone.contains(&p) {
                        break p;
                    }
                };
                xs.extend_from_slice(&p);
                ys.push(label as f64);
            }
            TrueParams::Fig7 { noise_sd, range } => {
                let x = range.lo + range.width() * rng.uniform().sqrt();
                xs.push(x);
                ys.push(fig7_function(x) + noise_sd * rng.standard_normal());
            }
            TrueParams::Bump(b) => {
                let x = loop {
                    let x = b.range.lo + b.range.width() * rng.uniform();
                    if !b.sparse.contains(x) {
                        break x;
                    }
                };
                xs.push(x);
                ys.push(x + bump(b, x) + b.noise_sd * rng.standard_normal());
            }
        }
    }
    let (names, target): (Vec<String>, &str) = if scenario.kind.is_classification() {
        (vec!["x1".into(), "x2".into()], "label")
    } else {
        (vec!["x".into()], "y")
    };
    let d = names.len();
    let features = Mat::from_row_major(n, d, xs).expect("finite draws");
    Dataset::new(names, target, features, ys).expect("consistent shapes")
}

/// Fraction of points whose true class posterior lies in `(0.25, 0.75)`.
pub fn overlap_fraction(scenario: &Scenario, data: &Dataset) -> Option<f64> {
    let mut inside = 0usize;
    for i in 0..data.len() {
        let p = scenario.class_posterior(data.features().row(i))?;
        if p > 0.25 && p < 0.75 {
            inside += 1;
        }
    }
    Some(inside as f64 / data.len().max(1) as f64)
}

/// Per-class, per-feature Gaussian classifier fit by maximum likelihood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianClassifier {
    /// Class prior probabilities.
    pub priors: Vec<f64>,
    /// `(mean, sd)` per class, per feature.
    pub params: Vec<Vec<(f64, f64)>>,
}

impl GaussianClassifier {
    pub fn fit(data: &Dataset, n_labels: usize) -> Result<GaussianClassifier> {
        let labels = Sample::new(data.target().to_vec())?;
        let prior_fit = mle_fit(ParametricFamily::Categorical { classes: n_labels }, &labels)?;
        let mut priors = prior_fit.theta_hat.clone();
        priors.push(1.0 - priors.iter().sum::<f64>());

        let mut params = Vec::with_capacity(n_labels);
        for c in 0..n_labels {
            let rows: Vec<usize> = (0..data.len()).filter(|&i| data.target()[i] as usize == c).collect();
            let mut per_feature = Vec::with_capacity(data.dim());
            for j in 0..data.dim() {
                let values: Vec<f64> = rows.iter().map(|&i| data.features()[(i, j)]).collect();
                let fit = mle_fit(ParametricFamily::Gaussian, &Sample::new(values)?)?;
                per_feature.push((fit.theta_hat[0], fit.theta_hat[1]));
            }
            params.push(per_feature);
        }
        Ok(GaussianClassifier { priors, params })
    }

    /// Label posterior at `x`, computed in log space.
    pub fn predict(&self, x: &[f64]) -> Result<ProbVector> {
        let log_post: Vec<f64> = self
            .priors
            .iter()
            .zip(&self.params)
            .map(|(prior, feats)| {
                prior.ln()
                    + feats
                        .iter()
                        .zip(x)
                        .map(|((mu, sd), v)| -sd.ln() - 0.5 * ((v - mu) / sd).powi(2))
                        .sum::<f64>()
            })
            .collect();
        let max = log_post.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let unnorm: Vec<f64> = log_post.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = unnorm.iter().sum();
        ProbVector::new(unnorm.into_iter().map(|u| u / z).collect())
    }
}

/// Redraws allowed per bootstrap member before giving up.
pub const MAX_RESAMPLE_ATTEMPTS: usize = 10;

/// Fits one Gaussian classifier per bootstrap resample and returns, for each
/// query, the ensemble of their label posteriors. Member `m` draws from
/// stream `(seed, m)`.
pub fn bootstrap_ensemble(
    data: &Dataset,
    n_members: usize,
    queries: &Mat,
    seed: u64,
) -> Result<Vec<PosteriorEnsemble>> {
    let n_labels = data
        .n_labels()
        .filter(|&c| c >= 2)
        .ok_or_else(|| UqError::InvalidParameter("bootstrap needs a dataset with at least 2 integer labels".into()))?;
    if n_members == 0 {
        return Err(UqError::InvalidParameter("ensemble needs at least one member".into()));
    }
    if queries.cols() != data.dim() {
        return Err(UqError::DimensionMismatch {
            context: "bootstrap queries",
            expected: data.dim(),
            found: queries.cols(),
        });
    }
    let n = data.len();
    let mut classifiers = Vec::with_capacity(n_members);
    for m in 0..n_members {
        let mut rng = RngStream::new(seed, m as u64);
        let mut last_missing = 0;
        let mut fitted = None;
        for _ in 0..MAX_RESAMPLE_ATTEMPTS {
            let rows: Vec<usize> = (0..n).map(|_| rng.index(n)).collect();
            let resample = data.select(&rows);
            match class_shortfall(&resample, n_labels) {
                Some(c) => last_missing = c,
                None => match GaussianClassifier::fit(&resample, n_labels) {
                    Ok(c) => {
                        fitted = Some(c);
                        break;
                    }
                    Err(UqError::DegenerateData(_)) => {}
                    Err(e) => return Err(e),
                },
            }
        }
        classifiers.push(fitted.ok_or(UqError::DegenerateResample {
            class: last_missing,
            attempts: MAX_RESAMPLE_ATTEMPTS,
        })?);
    }
    (0..queries.rows())
        .map(|q| {
            let members = classifiers
                .iter()
                .map(|c| c.predict(queries.row(q)))
                .collect::<Result<Vec<_>>>()?;
            PosteriorEnsemble::uniform(members)
        })
        .collect()
}

/// First label with fewer than two rows (too few for a variance estimate).
fn class_shortfall(data: &Dataset, n_labels: usize) -> Option<usize> {
    let mut counts = vec![0usize; n_labels];
    for &y in data.target() {
        counts[y as usize] += 1;
    }
    counts.iter().position(|&c| c < 2)
}
