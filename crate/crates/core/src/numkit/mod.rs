//! Numerical substrate: dense matrices, jittered Cholesky, finite
//! differences, normal distribution helpers and seeded random streams.

mod cholesky;
mod diff;
mod mat;
mod normal;
mod rng;

pub use cholesky::{cholesky_with_jitter, solve_psd, CholeskyFactor, DEFAULT_JITTER_START, JITTER_STEPS};
pub use diff::{finite_diff_hessian, DEFAULT_HESSIAN_STEP};
pub use mat::{dot, squared_distance, Mat};
pub use normal::{normal_quantile, std_normal_cdf, std_normal_pdf};
pub use rng::RngStream;
