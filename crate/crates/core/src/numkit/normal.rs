#![allow(clippy::excessive_precision)]

use std::f64::consts::SQRT_2;

use statrs::function::erf::erfc;

use crate::error::{Result, UqError};

/// Standard normal CDF `Φ(z)`.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

// Acklam's rational approximation, refined below. Coefficients as published.
const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549671350461284e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];

fn acklam(p: f64) -> f64 {
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Inverse standard normal CDF for `0 < p < 1`.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(UqError::OutOfRange {
            value: p,
            range: "(0, 1)",
        });
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let mut z = acklam(p);
    // Halley refinement; two steps take the ~1e-9 seed to machine precision.
    for _ in 0..2 {
        let e = std_normal_cdf(z) - p;
        let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * z * z).exp();
        z -= u / (1.0 + 0.5 * z * u);
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_examples() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        assert!((normal_quantile(0.975).unwrap() - 1.959964).abs() < 1e-6);
        assert!((normal_quantile(0.841345).unwrap() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn quantile_domain() {
        for p in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(matches!(normal_quantile(p), Err(UqError::OutOfRange { .. })));
        }
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(10.0) - 1.0).abs() < 1e-12);
        assert!((std_normal_cdf(1.0) - 0.841345).abs() < 1e-6);
    }

    #[test]
    fn deep_tail_quantile_round_trips() {
        for p in [1e-12, 1e-6, 0.01, 0.99, 1.0 - 1e-9] {
            let z = normal_quantile(p).unwrap();
            let back = std_normal_cdf(z);
            assert!((back - p).abs() <= 1e-9 * p.min(1.0 - p).max(1e-3), "{p} {back}");
        }
    }
}
