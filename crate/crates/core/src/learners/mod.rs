//! Estimators sharing one train/predict contract.

mod atlm;
mod cart;
mod forest;
mod knn;

pub use atlm::{skewness, AtlmModel, Transform};
pub use cart::{
    best_split, scores_tie, split_criterion, CartConfig, CartTree, Node, SplitChoice, DEPTH_RANGE,
    FRACTION_RANGE, LEAF_RANGE, SPLIT_RANGE,
};
pub use forest::{Forest, ForestConfig};
pub use knn::{knn_predict, KnnModel, DEFAULT_K};

use crate::error::{Error, Result};

/// A trained model. Models are immutable and safe to share across threads.
pub trait Estimator: Send + Sync {
    fn predict(&self, row: &[f64]) -> Result<f64>;

    fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }
}

pub(crate) fn check_width(expected: usize, row: &[f64]) -> Result<()> {
    if row.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: row.len(),
        });
    }
    Ok(())
}
