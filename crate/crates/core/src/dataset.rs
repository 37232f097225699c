use serde::{Deserialize, Serialize};

use crate::error::{Result, UqError};
use crate::numkit::Mat;

/// Rows of features plus one target (a real value or a label index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    feature_names: Vec<String>,
    target_name: String,
    features: Mat,
    target: Vec<f64>,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        target_name: impl Into<String>,
        features: Mat,
        target: Vec<f64>,
    ) -> Result<Self> {
        if feature_names.len() != features.cols() {
            return Err(UqError::DimensionMismatch {
                context: "dataset feature names",
                expected: features.cols(),
                found: feature_names.len(),
            });
        }
        if target.len() != features.rows() {
            return Err(UqError::DimensionMismatch {
                context: "dataset target",
                expected: features.rows(),
                found: target.len(),
            });
        }
        if let Some(i) = target.iter().position(|v| !v.is_finite()) {
            return Err(UqError::NonFiniteEvaluation(format!("target row {i}")));
        }
        Ok(Dataset {
            feature_names,
            target_name: target_name.into(),
            features,
            target,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn features(&self) -> &Mat {
        &self.features
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Distinct labels `0..C` when the target holds label indices.
    pub fn n_labels(&self) -> Option<usize> {
        if self.target.iter().any(|v| *v < 0.0 || v.fract() != 0.0) {
            return None;
        }
        self.target.iter().map(|v| *v as usize + 1).max()
    }

    /// Column names in file order: features, then the target.
    pub fn header(&self) -> Vec<String> {
        let mut h = self.feature_names.clone();
        h.push(self.target_name.clone());
        h
    }

    /// Row subset in the given order.
    pub fn select(&self, rows: &[usize]) -> Dataset {
        let d = self.dim();
        let mut data = Vec::with_capacity(rows.len() * d);
        for &r in rows {
            data.extend_from_slice(self.features.row(r));
        }
        Dataset {
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
            features: Mat::from_row_major(rows.len(), d, data).expect("rows of a valid matrix"),
            target: rows.iter().map(|&r| self.target[r]).collect(),
        }
    }
}
