//! Bagged CART regression forests, one per destination.

mod ensemble;
mod io;
mod matrix;
mod split;
mod tree;

pub use ensemble::{fit_forest, fit_predictor, normalize_distribution, DestinationPredictor, DistributionModel, Forest};
pub use matrix::ColumnMatrix;
pub use split::{best_split, Split};
pub use tree::{fit_tree, Tree, TreeNode};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` tries all of them.
    pub mtry: Option<usize>,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub rng_seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 20,
            mtry: None,
            min_samples_split: 2,
            max_depth: None,
            bootstrap: true,
            rng_seed: 0,
        }
    }
}

impl ForestParams {
    pub fn validate(&self, feature_dim: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be >= 1".into()));
        }
        if let Some(m) = self.mtry {
            if m == 0 || m > feature_dim {
                return Err(Error::Config(format!("mtry must be in 1..={feature_dim}, got {m}")));
            }
        }
        Ok(())
    }

    pub fn mtry_for(&self, feature_dim: usize) -> usize {
        self.mtry.unwrap_or(feature_dim).min(feature_dim)
    }
}
