//! Pre-extracted feature vectors paired with grasp label distributions.

use alloc::string::String;
use alloc::vec::Vec;

use crate::grasp::GraspDistribution;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DatasetError {
    #[error("row {row} has {actual} features, expected {expected}")]
    ShapeMismatch { row: usize, expected: usize, actual: usize },
    #[error("row {row} contains a non-finite feature")]
    NonFinite { row: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub image_id: String,
    pub features: Vec<f64>,
    pub label: GraspDistribution,
}

/// Rows with a uniform feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    feature_dim: usize,
    rows: Vec<FeatureRow>,
}

impl FeatureDataset {
    pub fn new(feature_dim: usize, rows: Vec<FeatureRow>) -> Result<Self, DatasetError> {
        for (row, r) in rows.iter().enumerate() {
            if r.features.len() != feature_dim {
                return Err(DatasetError::ShapeMismatch { row, expected: feature_dim, actual: r.features.len() });
            }
            if r.features.iter().any(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite { row });
            }
        }
        Ok(Self { feature_dim, rows })
    }

    /// Infers the dimension from the first row; an empty list gets dimension 0.
    pub fn from_rows(rows: Vec<FeatureRow>) -> Result<Self, DatasetError> {
        let dim = rows.first().map_or(0, |r| r.features.len());
        Self::new(dim, rows)
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn rows(&self) -> &[FeatureRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<GraspDistribution> {
        self.rows.iter().map(|r| r.label).collect()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self { feature_dim: self.feature_dim, rows: indices.iter().map(|&i| self.rows[i].clone()).collect() }
    }

    pub fn into_rows(self) -> Vec<FeatureRow> {
        self.rows
    }
}
