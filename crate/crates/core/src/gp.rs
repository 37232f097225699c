//! Exact zero-mean Gaussian-process regression with the noise / excess
//! variance split of the posterior predictive.

use serde::{Deserialize, Serialize};

use crate::error::{Result, UqError};
use crate::numkit::{
    cholesky_with_jitter, dot, squared_distance, CholeskyFactor, Mat, RngStream, DEFAULT_JITTER_START,
};
use crate::report::UncertaintyReport;

/// Floor on `σ² - σ_ε²` below which the excess is treated as rounding.
const EPISTEMIC_FLOOR_TOL: f64 = 1e-10;
/// Nugget added to prior-sample covariances.
pub const PRIOR_SAMPLE_NUGGET: f64 = 1e-10;
/// Largest point set accepted by [`gp_prior_sample`].
pub const MAX_PRIOR_SAMPLE_POINTS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Kernel {
    /// `s² exp(-‖x - x′‖² / 2ℓ²)`
    Rbf { signal_variance: f64, lengthscale: f64 },
    /// `s² ⟨x, x′⟩ + bias`
    Linear { signal_variance: f64, bias: f64 },
    /// `s²` everywhere. A zero constant is allowed.
    Constant { signal_variance: f64 },
}

impl Kernel {
    pub fn rbf(signal_variance: f64, lengthscale: f64) -> Result<Kernel> {
        Kernel::Rbf {
            signal_variance,
            lengthscale,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Kernel> {
        let ok = match self {
            Kernel::Rbf {
                signal_variance,
                lengthscale,
            } => signal_variance > 0.0 && lengthscale > 0.0 && lengthscale.is_finite(),
            Kernel::Linear { signal_variance, bias } => signal_variance > 0.0 && bias >= 0.0 && bias.is_finite(),
            Kernel::Constant { signal_variance } => signal_variance >= 0.0,
        };
        let finite = match self {
            Kernel::Rbf { signal_variance, .. }
            | Kernel::Linear { signal_variance, .. }
            | Kernel::Constant { signal_variance } => signal_variance.is_finite(),
        };
        if ok && finite {
            Ok(self)
        } else {
            Err(UqError::InvalidParameter(format!(
                "kernel hyperparameters out of range: {self:?}"
            )))
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Rbf {
                signal_variance,
                lengthscale,
            } => signal_variance * (-squared_distance(a, b) / (2.0 * lengthscale * lengthscale)).exp(),
            Kernel::Linear { signal_variance, bias } => signal_variance * dot(a, b) + bias,
            Kernel::Constant { signal_variance } => signal_variance,
        }
    }
}

/// Gram matrix `K(a, b)` between the rows of `a` and `b`.
pub fn gram(kernel: &Kernel, a: &Mat, b: &Mat) -> Result<Mat> {
    if a.cols() != b.cols() {
        return Err(UqError::DimensionMismatch {
            context: "gram",
            expected: a.cols(),
            found: b.cols(),
        });
    }
    let mut k = Mat::zeros(a.rows(), b.rows());
    let same = a == b;
    for i in 0..a.rows() {
        let start = if same { i } else { 0 };
        for j in start..b.rows() {
            let v = kernel.eval(a.row(i), b.row(j));
            k[(i, j)] = v;
            if same {
                k[(j, i)] = v;
            }
        }
    }
    Ok(k)
}

/// A fitted model: training data plus the factor of `K(X,X) + σ_ε² I`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpModel {
    train_x: Mat,
    train_y: Vec<f64>,
    kernel: Kernel,
    noise_variance: f64,
    factor: CholeskyFactor,
    alpha: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpPosterior {
    pub mean: f64,
    pub variance: f64,
    pub noise_variance: f64,
}

impl GpModel {
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    pub fn jitter_used(&self) -> f64 {
        self.factor.jitter_used()
    }

    pub fn n_train(&self) -> usize {
        self.train_y.len()
    }

    pub fn input_dim(&self) -> usize {
        self.train_x.cols()
    }

    /// Predicts many queries sharing the same factorization.
    pub fn predict_batch(&self, queries: &Mat) -> Result<Vec<GpPosterior>> {
        (0..queries.rows()).map(|i| gp_predict(self, queries.row(i))).collect()
    }
}

/// Factors `K(X,X) + σ_ε² I` (jittered if needed) and caches `α = (K + σ_ε² I)⁻¹ y`.
pub fn gp_fit(train_x: &Mat, train_y: &[f64], kernel: Kernel, noise_variance: f64) -> Result<GpModel> {
    let kernel = kernel.validated()?;
    if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
        return Err(UqError::InvalidParameter(format!(
            "noise variance must be finite and nonnegative, got {noise_variance}"
        )));
    }
    if train_x.rows() != train_y.len() {
        return Err(UqError::DimensionMismatch {
            context: "gp_fit targets",
            expected: train_x.rows(),
            found: train_y.len(),
        });
    }
    if let Some(i) = train_y.iter().position(|v| !v.is_finite()) {
        return Err(UqError::NonFiniteEvaluation(format!("target {i} is {}", train_y[i])));
    }
    let k = gram(&kernel, train_x, train_x)?.add_diagonal(noise_variance);
    let factor = cholesky_with_jitter(&k, DEFAULT_JITTER_START)?;
    let alpha = factor.solve_vec(train_y)?;
    Ok(GpModel {
        train_x: train_x.clone(),
        train_y: train_y.to_vec(),
        kernel,
        noise_variance,
        factor,
        alpha,
    })
}

/// Posterior predictive mean and variance (including noise) at one query.
pub fn gp_predict(model: &GpModel, query: &[f64]) -> Result<GpPosterior> {
    if query.len() != model.input_dim() && model.n_train() > 0 {
        return Err(UqError::DimensionMismatch {
            context: "gp_predict query",
            expected: model.input_dim(),
            found: query.len(),
        });
    }
    let k_qq = model.kernel.eval(query, query);
    let k_q: Vec<f64> = (0..model.n_train())
        .map(|i| model.kernel.eval(query, model.train_x.row(i)))
        .collect();
    let mean = dot(&k_q, &model.alpha);
    let mut v = k_q;
    model.factor.forward_substitute(&mut v);
    let explained = dot(&v, &v);
    Ok(GpPosterior {
        mean,
        variance: k_qq + model.noise_variance - explained,
        noise_variance: model.noise_variance,
    })
}

/// `total = σ²`, `aleatoric = σ_ε²`, `epistemic = σ² - σ_ε²`.
///
/// A slightly negative excess (within 1e-10) is floored to zero, in which
/// case `total` is reported as `σ_ε²` so the split stays additive.
pub fn gp_decompose(post: &GpPosterior) -> UncertaintyReport {
    let excess = post.variance - post.noise_variance;
    if (-EPISTEMIC_FLOOR_TOL..0.0).contains(&excess) {
        return UncertaintyReport {
            epistemic: 0.0,
            ..UncertaintyReport::from_total_and_aleatoric(post.noise_variance, post.noise_variance)
        };
    }
    UncertaintyReport::from_total_and_aleatoric(post.variance, post.noise_variance)
}

/// Draws `f(points) ~ N(0, K + 1e-10 I)`.
pub fn gp_prior_sample(kernel: &Kernel, points: &Mat, rng: &mut RngStream) -> Result<Vec<f64>> {
    let kernel = kernel.validated()?;
    if points.rows() > MAX_PRIOR_SAMPLE_POINTS {
        return Err(UqError::InvalidParameter(format!(
            "prior sampling supports at most {MAX_PRIOR_SAMPLE_POINTS} points, got {}",
            points.rows()
        )));
    }
    let k = gram(&kernel, points, points)?.add_diagonal(PRIOR_SAMPLE_NUGGET);
    let factor = cholesky_with_jitter(&k, DEFAULT_JITTER_START)?;
    let z = rng.standard_normals(points.rows());
    factor.lower().matvec(&z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(xs: &[f64]) -> Mat {
        Mat::column(xs).unwrap()
    }

    #[test]
    fn gram_examples() {
        let k = Kernel::rbf(1.0, 1.0).unwrap();
        assert_eq!(gram(&k, &col(&[0.0]), &col(&[0.0])).unwrap()[(0, 0)], 1.0);
        let g = gram(&k, &col(&[0.0, 2.0]), &col(&[0.0, 2.0])).unwrap();
        assert!((g[(0, 1)] - 0.135335).abs() < 1e-6);
        assert_eq!(g[(0, 1)], g[(1, 0)]);
        let c = Kernel::Constant { signal_variance: 0.5 };
        let g = gram(&c, &col(&[1.0, 2.0, 3.0]), &col(&[1.0, 2.0, 3.0])).unwrap();
        assert!(g.as_slice().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn gram_dimension_mismatch() {
        let k = Kernel::rbf(1.0, 1.0).unwrap();
        let a = Mat::zeros(2, 2);
        assert!(matches!(
            gram(&k, &a, &col(&[1.0])),
            Err(UqError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn prior_predictive() {
        let m = gp_fit(&Mat::zeros(0, 1), &[], Kernel::rbf(1.0, 1.0).unwrap(), 0.25).unwrap();
        let p = gp_predict(&m, &[0.3]).unwrap();
        assert_eq!(p.mean, 0.0);
        assert_eq!(p.variance, 1.25);
        let r = gp_decompose(&p);
        assert_eq!(r.epistemic, 1.0);
    }

    #[test]
    fn single_point_posterior() {
        let m = gp_fit(&col(&[0.0]), &[2.0], Kernel::rbf(1.0, 1.0).unwrap(), 1.0).unwrap();
        let p = gp_predict(&m, &[0.0]).unwrap();
        assert!((p.mean - 1.0).abs() < 1e-15);
        assert!((p.variance - 1.5).abs() < 1e-15);
        let r = gp_decompose(&p);
        assert_eq!((r.total, r.aleatoric, r.epistemic), (1.5, 1.0, 0.5));
    }

    #[test]
    fn noise_free_interpolation() {
        let m = gp_fit(&col(&[0.0]), &[2.0], Kernel::rbf(1.0, 1.0).unwrap(), 0.0).unwrap();
        let p = gp_predict(&m, &[0.0]).unwrap();
        assert!((p.mean - 2.0).abs() < 1e-8);
        assert!(p.variance.abs() < 1e-8);
        let r = gp_decompose(&p);
        assert_eq!(r.aleatoric, 0.0);
        assert!(r.epistemic.abs() < 1e-8);
    }

    #[test]
    fn duplicated_point_needs_jitter() {
        let m = gp_fit(&col(&[0.5, 0.5]), &[1.0, 1.0], Kernel::rbf(1.0, 1.0).unwrap(), 0.0).unwrap();
        assert!(m.jitter_used() > 0.0);
        let k = gram(m.kernel(), &col(&[0.5, 0.5]), &col(&[0.5, 0.5])).unwrap();
        let diff = m.factor().reconstruct().sub(&k.add_diagonal(m.jitter_used())).unwrap();
        assert!(diff.max_abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(Kernel::rbf(1.0, -1.0).is_err());
        assert!(gp_fit(&col(&[0.0]), &[1.0], Kernel::rbf(1.0, 1.0).unwrap(), -0.1).is_err());
        assert!(gp_fit(&col(&[0.0, 1.0]), &[1.0], Kernel::rbf(1.0, 1.0).unwrap(), 0.1).is_err());
    }

    #[test]
    fn query_dimension_checked() {
        let m = gp_fit(&col(&[0.0]), &[1.0], Kernel::rbf(1.0, 1.0).unwrap(), 0.1).unwrap();
        assert!(matches!(
            gp_predict(&m, &[0.0, 1.0]),
            Err(UqError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn prior_sample_properties() {
        let pts = col(&[0.0, 1.0, 2.0]);
        let zero = Kernel::Constant { signal_variance: 0.0 };
        let s = gp_prior_sample(&zero, &pts, &mut RngStream::new(1, 0)).unwrap();
        // only the 1e-10 nugget remains
        assert!(s.iter().all(|v| v.abs() < 1e-4));

        let k = Kernel::rbf(1.0, 1.0).unwrap();
        let a = gp_prior_sample(&k, &pts, &mut RngStream::new(9, 3)).unwrap();
        let b = gp_prior_sample(&k, &pts, &mut RngStream::new(9, 3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn prior_sample_moments() {
        let pts = col(&[0.0, 0.3, 0.6]);
        let k = Kernel::rbf(1.0, 1.0).unwrap();
        let target = gram(&k, &pts, &pts).unwrap();
        let mut rng = RngStream::new(2024, 0);
        let draws = 10_000;
        let mut cov = Mat::zeros(3, 3);
        for _ in 0..draws {
            let s = gp_prior_sample(&k, &pts, &mut rng).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    cov[(i, j)] += s[i] * s[j] / draws as f64;
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let t = target[(i, j)];
                assert!((cov[(i, j)] - t).abs() <= 0.05 * t, "{i}{j}");
            }
        }
    }
}
