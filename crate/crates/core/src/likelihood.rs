//! Closed-form maximum likelihood for a few parametric families, with the
//! Fisher information and AIC diagnostics that go with it.
//!
//! Parameterizations:
//! - `Bernoulli`: `θ = [p]`, observations in `{0, 1}`.
//! - `Gaussian`: `θ = [μ, σ]` with `σ > 0`.
//! - `Categorical { classes: C }`: `θ = [p_0, …, p_{C-2}]`, with
//!   `p_{C-1} = 1 - Σ θ`; observations are label indices `0..C`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Result, UqError};
use crate::numkit::{cholesky_with_jitter, finite_diff_hessian, normal_quantile, Mat, DEFAULT_HESSIAN_STEP};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ParametricFamily {
    Bernoulli,
    Gaussian,
    Categorical { classes: usize },
}

impl ParametricFamily {
    /// Parameter dimension `p`.
    pub fn param_dim(&self) -> usize {
        match self {
            ParametricFamily::Bernoulli => 1,
            ParametricFamily::Gaussian => 2,
            ParametricFamily::Categorical { classes } => classes.saturating_sub(1),
        }
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_dim() {
            return Err(UqError::DimensionMismatch {
                context: "parameter vector",
                expected: self.param_dim(),
                found: theta.len(),
            });
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(UqError::InvalidParameter(format!("non-finite parameter {theta:?}")));
        }
        match self {
            ParametricFamily::Bernoulli => {
                if !(theta[0] > 0.0 && theta[0] < 1.0) {
                    return Err(UqError::InvalidParameter(format!(
                        "bernoulli θ must lie in (0, 1), got {}",
                        theta[0]
                    )));
                }
            }
            ParametricFamily::Gaussian => {
                if !(theta[1] > 0.0) {
                    return Err(UqError::InvalidParameter(format!(
                        "gaussian σ must be positive, got {}",
                        theta[1]
                    )));
                }
            }
            ParametricFamily::Categorical { classes } => {
                if *classes < 2 {
                    return Err(UqError::InvalidParameter(
                        "categorical family needs at least 2 classes".into(),
                    ));
                }
                let sum: f64 = theta.iter().sum();
                if theta.iter().any(|&t| t < 0.0) || sum > 1.0 + SIMPLEX_TOL {
                    return Err(UqError::InvalidParameter(format!(
                        "categorical probabilities {theta:?} leave the simplex"
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_interior(&self, theta: &[f64]) -> Result<()> {
        self.check_theta(theta)?;
        if let ParametricFamily::Categorical { .. } = self {
            let last = 1.0 - theta.iter().sum::<f64>();
            if theta.iter().any(|&t| t <= 0.0) || last <= 0.0 {
                return Err(UqError::InvalidParameter(format!(
                    "categorical θ {theta:?} is on the simplex boundary"
                )));
            }
        }
        Ok(())
    }

    fn check_data(&self, data: &Sample) -> Result<()> {
        let obs = data.observations();
        match self {
            ParametricFamily::Bernoulli => {
                if let Some(v) = obs.iter().find(|&&v| v != 0.0 && v != 1.0) {
                    return Err(UqError::InvalidParameter(format!(
                        "bernoulli observation {v} is not 0 or 1"
                    )));
                }
            }
            ParametricFamily::Gaussian => {}
            ParametricFamily::Categorical { classes } => {
                if let Some(v) = obs
                    .iter()
                    .find(|&&v| v < 0.0 || v.fract() != 0.0 || v >= *classes as f64)
                {
                    return Err(UqError::InvalidParameter(format!("label {v} outside 0..{classes}")));
                }
            }
        }
        Ok(())
    }
}

/// A nonempty set of finite observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    observations: Vec<f64>,
}

impl Sample {
    pub fn new(observations: Vec<f64>) -> Result<Self> {
        if observations.is_empty() {
            return Err(UqError::DegenerateData("sample is empty".into()));
        }
        if let Some(i) = observations.iter().position(|v| !v.is_finite()) {
            return Err(UqError::NonFiniteEvaluation(format!(
                "observation {i} is {}",
                observations[i]
            )));
        }
        Ok(Sample { observations })
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// The sample repeated `times` times: same empirical distribution, `times`·N points.
    pub fn replicated(&self, times: usize) -> Sample {
        let observations = (0..times.max(1))
            .flat_map(|_| self.observations.iter().copied())
            .collect();
        Sample { observations }
    }

    fn label_counts(&self, classes: usize) -> Vec<f64> {
        let mut counts = vec![0.0; classes];
        for &v in &self.observations {
            counts[v as usize] += 1.0;
        }
        counts
    }
}

/// A log-likelihood value; zero density is an explicit outcome rather than a bare `-inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LogLik {
    Finite(f64),
    NegInfinity,
}

impl LogLik {
    pub fn value(self) -> f64 {
        match self {
            LogLik::Finite(v) => v,
            LogLik::NegInfinity => f64::NEG_INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            LogLik::Finite(v) => Some(v),
            LogLik::NegInfinity => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InformationMode {
    Observed,
    Expected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleResult {
    pub family: ParametricFamily,
    pub theta_hat: Vec<f64>,
    pub loglik_at_max: f64,
    /// Observed information at `theta_hat`.
    pub fisher: Mat,
    pub aic: f64,
    pub n: usize,
}

/// `Σ log f(x_n; θ)`.
pub fn log_likelihood(family: ParametricFamily, theta: &[f64], data: &Sample) -> Result<LogLik> {
    family.check_theta(theta)?;
    family.check_data(data)?;
    Ok(raw_log_likelihood(family, theta, data))
}

fn raw_log_likelihood(family: ParametricFamily, theta: &[f64], data: &Sample) -> LogLik {
    let obs = data.observations();
    match family {
        ParametricFamily::Bernoulli => {
            let (ln_p, ln_q) = (theta[0].ln(), (1.0 - theta[0]).ln());
            LogLik::Finite(obs.iter().map(|&x| if x == 1.0 { ln_p } else { ln_q }).sum())
        }
        ParametricFamily::Gaussian => {
            let (mu, sigma) = (theta[0], theta[1]);
            let n = obs.len() as f64;
            let ss: f64 = obs.iter().map(|x| (x - mu) * (x - mu)).sum();
            LogLik::Finite(-0.5 * n * LN_2PI - n * sigma.ln() - ss / (2.0 * sigma * sigma))
        }
        ParametricFamily::Categorical { classes } => {
            let probs = categorical_probs(theta);
            let counts = data.label_counts(classes);
            let mut total = 0.0;
            for (c, p) in counts.iter().zip(&probs) {
                if *c > 0.0 {
                    if *p <= 0.0 {
                        return LogLik::NegInfinity;
                    }
                    total += c * p.ln();
                }
            }
            LogLik::Finite(total)
        }
    }
}

fn categorical_probs(theta: &[f64]) -> Vec<f64> {
    let mut probs = theta.to_vec();
    probs.push((1.0 - theta.iter().sum::<f64>()).max(0.0));
    probs
}

/// Closed-form MLE with observed information and AIC at the maximum.
pub fn mle_fit(family: ParametricFamily, data: &Sample) -> Result<MleResult> {
    family.check_data(data)?;
    let obs = data.observations();
    let n = obs.len() as f64;
    let theta_hat = match family {
        ParametricFamily::Bernoulli => {
            let p = obs.iter().sum::<f64>() / n;
            if p == 0.0 || p == 1.0 {
                return Err(UqError::DegenerateData(format!(
                    "all {} bernoulli observations equal {p}; the MLE sits on the boundary",
                    obs.len()
                )));
            }
            vec![p]
        }
        ParametricFamily::Gaussian => {
            if obs.len() < 2 {
                return Err(UqError::DegenerateData(
                    "gaussian fit needs at least 2 observations".into(),
                ));
            }
            let mu = obs.iter().sum::<f64>() / n;
            let var = obs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n;
            if !(var > 0.0) {
                return Err(UqError::DegenerateData(
                    "gaussian observations have zero variance".into(),
                ));
            }
            vec![mu, var.sqrt()]
        }
        ParametricFamily::Categorical { classes } => {
            if classes < 2 {
                return Err(UqError::InvalidParameter(
                    "categorical family needs at least 2 classes".into(),
                ));
            }
            let counts = data.label_counts(classes);
            if let Some(c) = counts.iter().position(|&c| c == 0.0) {
                return Err(UqError::DegenerateData(format!(
                    "label {c} never observed; the MLE sits on the simplex boundary"
                )));
            }
            counts[..classes - 1].iter().map(|c| c / n).collect()
        }
    };
    let loglik = raw_log_likelihood(family, &theta_hat, data)
        .finite()
        .ok_or_else(|| UqError::NonFiniteEvaluation("log-likelihood at the MLE".into()))?;
    let loglik_at_max = snap_for_aic(loglik, family.param_dim());
    let fisher = fisher_information(family, &theta_hat, data, InformationMode::Observed)?;
    let mut result = MleResult {
        family,
        theta_hat,
        loglik_at_max,
        fisher,
        aic: 0.0,
        n: obs.len(),
    };
    result.aic = aic(family, &result, data);
    Ok(result)
}

/// Fisher information at `theta`: the negative Hessian of the log-likelihood
/// (observed) or `N` times the per-observation expected information.
pub fn fisher_information(
    family: ParametricFamily,
    theta: &[f64],
    data: &Sample,
    mode: InformationMode,
) -> Result<Mat> {
    family.check_interior(theta)?;
    family.check_data(data)?;
    let obs = data.observations();
    let n = obs.len() as f64;
    let info = match (family, mode) {
        (ParametricFamily::Bernoulli, InformationMode::Observed) => {
            let s: f64 = obs.iter().sum();
            let t = theta[0];
            Mat::from_row_major(1, 1, vec![s / (t * t) + (n - s) / ((1.0 - t) * (1.0 - t))])?
        }
        (ParametricFamily::Bernoulli, InformationMode::Expected) => {
            let t = theta[0];
            Mat::from_row_major(1, 1, vec![n / (t * (1.0 - t))])?
        }
        (ParametricFamily::Gaussian, InformationMode::Observed) => {
            let (mu, sigma) = (theta[0], theta[1]);
            let s1: f64 = obs.iter().map(|x| x - mu).sum();
            let s2: f64 = obs.iter().map(|x| (x - mu) * (x - mu)).sum();
            let s_2 = sigma * sigma;
            let mm = n / s_2;
            let ms = 2.0 * s1 / (s_2 * sigma);
            let ss = 3.0 * s2 / (s_2 * s_2) - n / s_2;
            Mat::from_row_major(2, 2, vec![mm, ms, ms, ss])?
        }
        (ParametricFamily::Gaussian, InformationMode::Expected) => {
            let s_2 = theta[1] * theta[1];
            Mat::from_row_major(2, 2, vec![n / s_2, 0.0, 0.0, 2.0 * n / s_2])?
        }
        (ParametricFamily::Categorical { classes }, mode) => {
            let probs = categorical_probs(theta);
            let weights: Vec<f64> = match mode {
                InformationMode::Observed => data.label_counts(classes),
                InformationMode::Expected => probs.iter().map(|p| n * p).collect(),
            };
            let p = classes - 1;
            let last = weights[p] / (probs[p] * probs[p]);
            let mut m = Mat::zeros(p, p);
            for i in 0..p {
                for j in 0..p {
                    m[(i, j)] = last;
                }
                m[(i, i)] += weights[i] / (probs[i] * probs[i]);
            }
            m
        }
    };
    Ok(info)
}

/// Observed information by central differences of the log-likelihood.
pub fn observed_information_fd(family: ParametricFamily, theta: &[f64], data: &Sample) -> Result<Mat> {
    family.check_interior(theta)?;
    family.check_data(data)?;
    let hess = finite_diff_hessian(
        |t| {
            if family.check_theta(t).is_err() {
                return f64::NAN;
            }
            raw_log_likelihood(family, t, data).value()
        },
        theta,
        DEFAULT_HESSIAN_STEP,
    )?;
    let p = theta.len();
    let mut info = Mat::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            info[(i, j)] = -hess[(i, j)];
        }
    }
    Ok(info)
}

/// Moves `loglik` by at most an ulp of the AIC so that `aic + 2ℓ̂ == 2p`
/// holds in floating point: once `2ℓ̂ = 2p - a` for a representable `a`, both
/// the AIC and the identity evaluate exactly. Converges in at most two rounds.
fn snap_for_aic(loglik: f64, p: usize) -> f64 {
    let two_p = 2.0 * p as f64;
    let mut two_l = 2.0 * loglik;
    for _ in 0..4 {
        let a = two_p - two_l;
        if a + two_l == two_p {
            break;
        }
        two_l = two_p - a;
    }
    two_l / 2.0
}

/// `2p - 2ℓ̂`.
pub fn aic(family: ParametricFamily, result: &MleResult, _data: &Sample) -> f64 {
    2.0 * family.param_dim() as f64 - 2.0 * result.loglik_at_max
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRegion {
    pub level: f64,
    /// Per-parameter Wald intervals.
    pub intervals: Vec<Interval>,
    /// Radius `r` of the joint region `(θ - θ̂)ᵀ I (θ - θ̂) ≤ r²`.
    pub ellipsoid_radius: f64,
}

/// Wald intervals `θ̂ᵢ ± z · sqrt((I⁻¹)ᵢᵢ)` and the chi-square ellipsoid radius.
pub fn confidence_region(result: &MleResult, level: f64) -> Result<ConfidenceRegion> {
    if !(level > 0.0 && level < 1.0) {
        return Err(UqError::OutOfRange {
            value: level,
            range: "(0, 1)",
        });
    }
    let p = result.theta_hat.len();
    let factor = match cholesky_with_jitter(&result.fisher, f64::MIN_POSITIVE) {
        Ok(f) if f.jitter_used() == 0.0 => f,
        _ => return Err(UqError::SingularInformation),
    };
    let z = normal_quantile(0.5 * (1.0 + level))?;
    let mut intervals = Vec::with_capacity(p);
    for i in 0..p {
        let mut e = vec![0.0; p];
        e[i] = 1.0;
        let var = factor.solve_vec(&e)?[i];
        if !(var > 0.0) || !var.is_finite() {
            return Err(UqError::SingularInformation);
        }
        let half = z * var.sqrt();
        intervals.push(Interval {
            lower: result.theta_hat[i] - half,
            upper: result.theta_hat[i] + half,
        });
    }
    let chi2 =
        ChiSquared::new(p as f64).map_err(|e| UqError::InvalidParameter(format!("chi-square with {p} dof: {e}")))?;
    let ellipsoid_radius = chi2.inverse_cdf(level).sqrt();
    Ok(ConfidenceRegion {
        level,
        intervals,
        ellipsoid_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bern(ones: usize, n: usize) -> Sample {
        Sample::new((0..n).map(|i| if i < ones { 1.0 } else { 0.0 }).collect()).unwrap()
    }

    #[test]
    fn loglik_examples() {
        let d = Sample::new(vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let v = log_likelihood(ParametricFamily::Bernoulli, &[0.5], &d).unwrap().value();
        assert!((v - 4.0 * 0.5f64.ln()).abs() < 1e-12);
        assert!((v + 2.772589).abs() < 1e-6);

        let v = log_likelihood(ParametricFamily::Bernoulli, &[0.7], &bern(7, 10))
            .unwrap()
            .value();
        assert!((v + 6.108643).abs() < 1e-6);

        let v = log_likelihood(
            ParametricFamily::Gaussian,
            &[0.0, 1.0],
            &Sample::new(vec![0.0]).unwrap(),
        )
        .unwrap()
        .value();
        assert!((v + 0.918939).abs() < 1e-6);
    }

    #[test]
    fn zero_density_is_explicit() {
        let fam = ParametricFamily::Categorical { classes: 3 };
        let d = Sample::new(vec![2.0]).unwrap();
        assert_eq!(log_likelihood(fam, &[0.5, 0.5], &d).unwrap(), LogLik::NegInfinity);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let d = bern(1, 2);
        for t in [0.0, 1.0, -0.2, 1.5] {
            assert!(matches!(
                log_likelihood(ParametricFamily::Bernoulli, &[t], &d),
                Err(UqError::InvalidParameter(_))
            ));
        }
        let g = Sample::new(vec![1.0, 2.0]).unwrap();
        assert!(log_likelihood(ParametricFamily::Gaussian, &[0.0, 0.0], &g).is_err());
        assert!(log_likelihood(ParametricFamily::Gaussian, &[0.0], &g).is_err());
    }

    #[test]
    fn mle_closed_forms() {
        let r = mle_fit(ParametricFamily::Bernoulli, &bern(7, 10)).unwrap();
        assert!((r.theta_hat[0] - 0.7).abs() < 1e-15);

        let r = mle_fit(ParametricFamily::Gaussian, &Sample::new(vec![1.0, 3.0]).unwrap()).unwrap();
        assert_eq!(r.theta_hat[0], 2.0);
        assert_eq!(r.theta_hat[1] * r.theta_hat[1], 1.0);

        let labels = [vec![0.0; 2], vec![1.0; 3], vec![2.0; 5]].concat();
        let r = mle_fit(
            ParametricFamily::Categorical { classes: 3 },
            &Sample::new(labels).unwrap(),
        )
        .unwrap();
        assert!((r.theta_hat[0] - 0.2).abs() < 1e-15 && (r.theta_hat[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn boundary_mles_are_degenerate() {
        assert!(matches!(
            mle_fit(ParametricFamily::Bernoulli, &bern(5, 5)),
            Err(UqError::DegenerateData(_))
        ));
        assert!(matches!(
            mle_fit(ParametricFamily::Gaussian, &Sample::new(vec![2.0, 2.0]).unwrap()),
            Err(UqError::DegenerateData(_))
        ));
        assert!(matches!(
            mle_fit(ParametricFamily::Gaussian, &Sample::new(vec![2.0]).unwrap()),
            Err(UqError::DegenerateData(_))
        ));
        assert!(matches!(
            mle_fit(
                ParametricFamily::Categorical { classes: 3 },
                &Sample::new(vec![0.0, 1.0]).unwrap()
            ),
            Err(UqError::DegenerateData(_))
        ));
    }

    #[test]
    fn fisher_examples() {
        let d = bern(50, 100);
        let r = mle_fit(ParametricFamily::Bernoulli, &d).unwrap();
        assert!((r.fisher[(0, 0)] - 400.0).abs() < 1e-9);
        let fd = observed_information_fd(ParametricFamily::Bernoulli, &r.theta_hat, &d).unwrap();
        assert!((fd[(0, 0)] - 400.0).abs() / 400.0 < 1e-4);

        let g = Sample::new(vec![0.0; 25]).unwrap();
        let info = fisher_information(ParametricFamily::Gaussian, &[0.0, 1.0], &g, InformationMode::Expected).unwrap();
        assert_eq!(info[(0, 0)], 25.0);
    }

    #[test]
    fn expected_information_is_additive() {
        let d = Sample::new(vec![0.3, -1.2, 2.2, 0.9]).unwrap();
        let one = fisher_information(ParametricFamily::Gaussian, &[0.1, 1.3], &d, InformationMode::Expected).unwrap();
        let two = fisher_information(
            ParametricFamily::Gaussian,
            &[0.1, 1.3],
            &d.replicated(2),
            InformationMode::Expected,
        )
        .unwrap();
        for (a, b) in one.as_slice().iter().zip(two.as_slice()) {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn aic_identity_is_exact_across_magnitudes() {
        let mut rng = crate::numkit::RngStream::new(5, 5);
        for _ in 0..20_000 {
            let l = (rng.uniform() - 0.5) * 10f64.powf(8.0 * rng.uniform() - 2.0);
            let p = 1 + rng.index(5);
            let snapped = snap_for_aic(l, p);
            let a = 2.0 * p as f64 - 2.0 * snapped;
            assert_eq!(a + 2.0 * snapped, 2.0 * p as f64, "{l} {p}");
            assert!((snapped - l).abs() <= 4.0 * f64::EPSILON * a.abs().max(1.0));
        }
    }

    #[test]
    fn aic_examples() {
        let r = mle_fit(ParametricFamily::Bernoulli, &bern(7, 10)).unwrap();
        assert!((r.aic - 14.217286).abs() < 1e-6);
        let g = Sample::new(vec![1.0, 3.0]).unwrap();
        let r = mle_fit(ParametricFamily::Gaussian, &g).unwrap();
        assert_eq!(r.aic + 2.0 * r.loglik_at_max, 4.0);
    }

    #[test]
    fn nested_families_order_loglik() {
        // Gaussian with σ fixed at 1 is nested in the free-σ family.
        let d = Sample::new(vec![0.2, 1.9, -0.4, 3.3, 0.8]).unwrap();
        let full = mle_fit(ParametricFamily::Gaussian, &d).unwrap();
        let mu = full.theta_hat[0];
        let restricted = log_likelihood(ParametricFamily::Gaussian, &[mu, 1.0], &d)
            .unwrap()
            .value();
        assert!(full.loglik_at_max >= restricted);
    }

    #[test]
    fn wald_interval_example() {
        let r = mle_fit(ParametricFamily::Bernoulli, &bern(7, 10)).unwrap();
        let cr = confidence_region(&r, 0.95).unwrap();
        assert!((cr.intervals[0].lower - 0.4160).abs() < 1e-4);
        assert!((cr.intervals[0].upper - 0.9840).abs() < 1e-4);
        // one-dimensional ellipsoid radius is the same z
        assert!((cr.ellipsoid_radius - 1.959964).abs() < 1e-5);
    }

    #[test]
    fn interval_shrinks_with_level_and_n() {
        let r = mle_fit(ParametricFamily::Bernoulli, &bern(7, 10)).unwrap();
        let tiny = confidence_region(&r, 1e-9).unwrap();
        assert!(tiny.intervals[0].width() < 1e-8);

        let r4 = mle_fit(ParametricFamily::Bernoulli, &bern(7, 10).replicated(4)).unwrap();
        let w1 = confidence_region(&r, 0.95).unwrap().intervals[0].width();
        let w4 = confidence_region(&r4, 0.95).unwrap().intervals[0].width();
        assert!((w4 - 0.5 * w1).abs() < 1e-12);
    }

    #[test]
    fn singular_information_is_reported() {
        let mut r = mle_fit(ParametricFamily::Bernoulli, &bern(7, 10)).unwrap();
        r.fisher = Mat::zeros(1, 1);
        assert_eq!(confidence_region(&r, 0.9), Err(UqError::SingularInformation));
    }
}
