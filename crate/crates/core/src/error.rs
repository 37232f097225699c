use thiserror::Error;

/// Errors raised by the numerical and estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum UqError {
    #[error("matrix is not positive definite (last jitter tried: {last_jitter:e})")]
    NotPositiveDefinite { last_jitter: f64 },

    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite evaluation: {0}")]
    NonFiniteEvaluation(String),

    #[error("value {value} outside the valid range {range}")]
    OutOfRange { value: f64, range: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("information matrix is singular")]
    SingularInformation,

    #[error("invalid probability vector: {0}")]
    InvalidProbVector(String),

    #[error("degenerate grid: all predictive mass falls in cell {cell}")]
    DegenerateGrid { cell: usize },

    #[error("sampler diverged: acceptance rate {rate:.4} in block `{block}`")]
    SamplerDiverged { block: &'static str, rate: f64 },

    #[error("bootstrap resample missed class {class} after {attempts} attempts")]
    DegenerateResample { class: usize, attempts: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl UqError {
    /// True for failures of the numerics rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            UqError::NotPositiveDefinite { .. }
                | UqError::NonFiniteEvaluation(_)
                | UqError::SingularInformation
                | UqError::DegenerateGrid { .. }
                | UqError::SamplerDiverged { .. }
                | UqError::DegenerateResample { .. }
                | UqError::DegenerateData(_)
        )
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            UqError::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            UqError::NotSymmetric { .. } => "NotSymmetric",
            UqError::DimensionMismatch { .. } => "DimensionMismatch",
            UqError::NonFiniteEvaluation(_) => "NonFiniteEvaluation",
            UqError::OutOfRange { .. } => "OutOfRange",
            UqError::InvalidParameter(_) => "InvalidParameter",
            UqError::DegenerateData(_) => "DegenerateData",
            UqError::SingularInformation => "SingularInformation",
            UqError::InvalidProbVector(_) => "InvalidProbVector",
            UqError::DegenerateGrid { .. } => "DegenerateGrid",
            UqError::SamplerDiverged { .. } => "SamplerDiverged",
            UqError::DegenerateResample { .. } => "DegenerateResample",
            UqError::InvalidConfig(_) => "InvalidConfig",
        }
    }
}

pub type Result<T> = std::result::Result<T, UqError>;
