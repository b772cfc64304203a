use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{CartConfig, CartTree, Estimator};
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub trees: usize,
    /// Resample rows with replacement for every tree.
    pub bootstrap: bool,
    /// `None` uses sqrt(F)/F.
    pub max_features_fraction: Option<f64>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            trees: 100,
            bootstrap: true,
            max_features_fraction: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<CartTree>,
}

impl Forest {
    pub fn train(train: &Dataset, config: &ForestConfig, seed: u64) -> Result<Self> {
        if config.trees == 0 {
            return Err(Error::InvalidArgument("a forest needs at least one tree".into()));
        }
        let f = train.n_features().max(1) as f64;
        let fraction = config.max_features_fraction.unwrap_or(f.sqrt() / f);
        let cart = CartConfig {
            max_features_fraction: fraction,
            ..CartConfig::default()
        };
        let names: Vec<String> = train.feature_names().into_iter().map(str::to_string).collect();
        let n = train.n_rows();
        let trees = (0..config.trees)
            .map(|t| {
                let mut rng = seeds::derived_rng(seed, &[&"bootstrap", &t]);
                let tree_seed = seeds::derive(seed, &[&"tree", &t]);
                if config.bootstrap {
                    let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                    let rows: Vec<Vec<f64>> = idx.iter().map(|&i| train.row(i).to_vec()).collect();
                    let ys: Vec<f64> = idx.iter().map(|&i| train.target(i)).collect();
                    CartTree::train_matrix(&rows, &ys, names.clone(), &cart, tree_seed)
                } else {
                    CartTree::train_matrix(train.rows(), train.targets(), names.clone(), &cart, tree_seed)
                }
            })
            .collect::<Result<_>>()?;
        Ok(Forest { trees })
    }

    pub fn trees(&self) -> &[CartTree] {
        &self.trees
    }
}

impl Estimator for Forest {
    fn predict(&self, row: &[f64]) -> Result<f64> {
        let mut sum = 0.0;
        for t in &self.trees {
            sum += t.predict(row)?;
        }
        Ok(sum / self.trees.len() as f64)
    }
}
