//! Predictive-uncertainty decomposition.
//!
//! Four estimators split predictive uncertainty into an aleatoric part (noise
//! inherent in the data) and an epistemic part (lack of knowledge):
//!
//! - [`likelihood`]: closed-form MLE with Fisher information, Wald regions and AIC.
//! - [`gp`]: exact Gaussian-process regression; noise variance vs excess variance.
//! - [`entropy`]: predictive entropy = expected entropy + mutual information over
//!   a posterior ensemble.
//! - [`bne`]: a Bayesian nonparametric ensemble whose mutual information is
//!   further split into parametric and structural parts by nested models.
//!
//! [`simgen`] produces seeded synthetic scenarios to exercise all of the above.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bne;
pub mod dataset;
pub mod entropy;
pub mod error;
pub mod gp;
pub mod likelihood;
pub mod numkit;
pub mod report;
pub mod simgen;

pub use dataset::Dataset;
pub use entropy::{PosteriorEnsemble, ProbVector};
pub use error::{Result, UqError};
pub use gp::{GpModel, GpPosterior, Kernel};
pub use likelihood::{MleResult, ParametricFamily, Sample};
pub use numkit::{CholeskyFactor, Mat, RngStream};
pub use report::UncertaintyReport;
