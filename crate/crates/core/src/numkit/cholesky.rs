use serde::{Deserialize, Serialize};

use super::mat::Mat;
use crate::error::{Result, UqError};

/// Default first rung of the jitter schedule.
pub const DEFAULT_JITTER_START: f64 = 1e-10;
/// Number of tenfold escalations after the first jitter attempt.
pub const JITTER_STEPS: i32 = 8;
const SYMMETRY_TOL: f64 = 1e-10;

/// Lower-triangular factor `L` with `L Lᵀ = A + jitter_used · I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CholeskyFactor {
    lower: Mat,
    jitter_used: f64,
}

impl CholeskyFactor {
    pub fn lower(&self) -> &Mat {
        &self.lower
    }

    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    /// `L Lᵀ`, i.e. the jittered matrix that was factored.
    pub fn reconstruct(&self) -> Mat {
        self.lower.matmul(&self.lower.transpose()).expect("square factor")
    }

    /// Solves `L z = b` in place.
    pub fn forward_substitute(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let row = self.lower.row(i);
            let mut s = b[i];
            for k in 0..i {
                s -= row[k] * b[k];
            }
            b[i] = s / row[i];
        }
    }

    /// Solves `Lᵀ x = z` in place.
    pub fn backward_substitute(&self, z: &mut [f64]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s -= self.lower[(k, i)] * z[k];
            }
            z[i] = s / self.lower[(i, i)];
        }
    }

    /// Solves `(A + jitter I) x = b` for a single right-hand side.
    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(UqError::DimensionMismatch {
                context: "solve_psd",
                expected: self.dim(),
                found: b.len(),
            });
        }
        let mut x = b.to_vec();
        self.forward_substitute(&mut x);
        self.backward_substitute(&mut x);
        Ok(x)
    }

    /// `log det(L Lᵀ)`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.lower[(i, i)].ln()).sum::<f64>()
    }
}

fn try_factor(a: &Mat, jitter: f64) -> Option<Mat> {
    let n = a.rows();
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)] + jitter;
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Some(l)
}

/// Cholesky factorization with a bounded jitter schedule.
///
/// Tries the plain matrix first, then `jitter_start · 10^k` for `k = 0..=8`,
/// returning the first success.
pub fn cholesky_with_jitter(a: &Mat, jitter_start: f64) -> Result<CholeskyFactor> {
    if !a.is_square() {
        return Err(UqError::DimensionMismatch {
            context: "cholesky_with_jitter",
            expected: a.rows(),
            found: a.cols(),
        });
    }
    if !(jitter_start > 0.0) || !jitter_start.is_finite() {
        return Err(UqError::InvalidParameter(format!(
            "jitter_start must be positive, got {jitter_start}"
        )));
    }
    let (row, col, gap) = a.max_asymmetry();
    let scale = a.max_abs().max(1.0);
    if gap > SYMMETRY_TOL * scale {
        return Err(UqError::NotSymmetric { row, col, gap });
    }
    if let Some(lower) = try_factor(a, 0.0) {
        return Ok(CholeskyFactor {
            lower,
            jitter_used: 0.0,
        });
    }
    let mut jitter = jitter_start;
    for k in 0..=JITTER_STEPS {
        jitter = jitter_start * 10f64.powi(k);
        if let Some(lower) = try_factor(a, jitter) {
            return Ok(CholeskyFactor {
                lower,
                jitter_used: jitter,
            });
        }
    }
    Err(UqError::NotPositiveDefinite { last_jitter: jitter })
}

/// Solves `(A + jitter I) X = B` column by column.
pub fn solve_psd(factor: &CholeskyFactor, b: &Mat) -> Result<Mat> {
    if b.rows() != factor.dim() {
        return Err(UqError::DimensionMismatch {
            context: "solve_psd",
            expected: factor.dim(),
            found: b.rows(),
        });
    }
    let mut out = Mat::zeros(b.rows(), b.cols());
    for j in 0..b.cols() {
        let x = factor.solve_vec(&b.col_to_vec(j))?;
        for (i, v) in x.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_close(a: &Mat, b: &Mat, tol: f64) -> bool {
        let scale = a.max_abs().max(b.max_abs()).max(1.0);
        a.sub(b).unwrap().max_abs() <= tol * scale
    }

    #[test]
    fn identity_factor_needs_no_jitter() {
        let f = cholesky_with_jitter(&Mat::identity(3), 1e-10).unwrap();
        assert_eq!(f.lower(), &Mat::identity(3));
        assert_eq!(f.jitter_used(), 0.0);
    }

    #[test]
    fn two_by_two_factor() {
        let a = Mat::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let f = cholesky_with_jitter(&a, 1e-10).unwrap();
        let expected = Mat::from_rows(&[vec![2.0, 0.0], vec![1.0, 2f64.sqrt()]]).unwrap();
        assert!(rel_close(f.lower(), &expected, 1e-14));
        assert!(rel_close(&f.reconstruct(), &a, 1e-12));
    }

    #[test]
    fn rank_one_needs_jitter() {
        let a = Mat::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let f = cholesky_with_jitter(&a, 1e-10).unwrap();
        assert!(f.jitter_used() > 0.0);
        let jittered = a.add_diagonal(f.jitter_used());
        assert!(rel_close(&f.reconstruct(), &jittered, 1e-8));
    }

    #[test]
    fn schedule_exhaustion_reports_not_pd() {
        let a = Mat::from_rows(&[vec![-1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let err = cholesky_with_jitter(&a, 1e-10).unwrap_err();
        assert!(matches!(err, UqError::NotPositiveDefinite { .. }));
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let a = Mat::from_rows(&[vec![2.0, 1.0], vec![0.0, 2.0]]).unwrap();
        assert!(matches!(
            cholesky_with_jitter(&a, 1e-10),
            Err(UqError::NotSymmetric { row: 0, col: 1, .. })
        ));
    }

    #[test]
    fn solves_match_examples() {
        let f = cholesky_with_jitter(&Mat::identity(2), 1e-10).unwrap();
        let x = solve_psd(&f, &Mat::column(&[3.0, 5.0]).unwrap()).unwrap();
        assert_eq!(x.as_slice(), &[3.0, 5.0]);

        let a = Mat::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let f = cholesky_with_jitter(&a, 1e-10).unwrap();
        let x = f.solve_vec(&[1.0, 0.0]).unwrap();
        assert!((x[0] - 0.375).abs() < 1e-14 && (x[1] + 0.25).abs() < 1e-14);
        // multiply back
        let back = a.matvec(&x).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-12 && back[1].abs() < 1e-12);

        let f = cholesky_with_jitter(&Mat::from_rows(&[vec![2.0]]).unwrap(), 1e-10).unwrap();
        assert!((f.solve_vec(&[6.0]).unwrap()[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn solve_rejects_bad_shape() {
        let f = cholesky_with_jitter(&Mat::identity(2), 1e-10).unwrap();
        assert!(matches!(
            solve_psd(&f, &Mat::column(&[1.0, 2.0, 3.0]).unwrap()),
            Err(UqError::DimensionMismatch { .. })
        ));
    }
}
