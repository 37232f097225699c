use super::mat::Mat;
use crate::error::{Result, UqError};

/// Default relative step for [`finite_diff_hessian`].
pub const DEFAULT_HESSIAN_STEP: f64 = 1e-4;

/// Central-difference Hessian of `f` at `theta`, symmetrized as `(H + Hᵀ)/2`.
///
/// Coordinate `i` is perturbed by `h · max(1, |theta_i|)`.
pub fn finite_diff_hessian<F>(f: F, theta: &[f64], h: f64) -> Result<Mat>
where
    F: Fn(&[f64]) -> f64,
{
    if !(h > 0.0) {
        return Err(UqError::InvalidParameter(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let p = theta.len();
    let steps: Vec<f64> = theta.iter().map(|t| h * t.abs().max(1.0)).collect();
    let mut point = theta.to_vec();
    let eval = |point: &[f64]| -> Result<f64> {
        let v = f(point);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(UqError::NonFiniteEvaluation(format!("objective is {v} at {point:?}")))
        }
    };

    let f0 = eval(&point)?;
    let mut hess = Mat::zeros(p, p);
    for i in 0..p {
        let hi = steps[i];
        point[i] = theta[i] + hi;
        let fp = eval(&point)?;
        point[i] = theta[i] - hi;
        let fm = eval(&point)?;
        point[i] = theta[i];
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (hi * hi);

        for j in (i + 1)..p {
            let hj = steps[j];
            let mut corner = |si: f64, sj: f64| -> Result<f64> {
                point[i] = theta[i] + si * hi;
                point[j] = theta[j] + sj * hj;
                let v = eval(&point);
                point[i] = theta[i];
                point[j] = theta[j];
                v
            };
            let fpp = corner(1.0, 1.0)?;
            let fpm = corner(1.0, -1.0)?;
            let fmp = corner(-1.0, 1.0)?;
            let fmm = corner(-1.0, -1.0)?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess.symmetrized())
}
