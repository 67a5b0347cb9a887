use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::prep::{EncodingConfig, Prep};
use super::tree::{grow_tree, Binned, Criterion, GrowConfig, Tree};
use super::{check_two_classes, rng_for, LearnError};
use crate::featurize::FeatureSchema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, d: usize) -> Option<usize> {
        match self {
            MaxFeatures::All => None,
            MaxFeatures::Sqrt => Some(((d as f64).sqrt().round() as usize).max(1)),
            MaxFeatures::Count(k) => Some(k.max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Unlimited when unset.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub max_bins: usize,
    pub encoding: EncodingConfig,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            max_bins: 255,
            encoding: EncodingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub prep: Prep,
    pub trees: Vec<Tree>,
}

impl ForestModel {
    /// Mean over trees of the leaf positive fraction.
    pub fn score(&self, row: &[f64]) -> f64 {
        if self.trees.is_empty() {
            return 0.0;
        }
        let r = self.prep.transform_row(row);
        self.trees.iter().map(|t| t.predict(&r)).sum::<f64>() / self.trees.len() as f64
    }
}

pub fn train_forest(
    schema: &FeatureSchema,
    x: &Matrix,
    labels: &[bool],
    cfg: &ForestConfig,
    seed: u64,
) -> Result<ForestModel, LearnError> {
    check_two_classes(labels)?;
    let (prep, xt) = Prep::fit(x, labels, &schema.categorical_columns(), cfg.encoding, false, seed)?;
    let data = Binned::new(&xt, cfg.max_bins);
    let n = xt.rows();
    let y: Vec<f64> = labels.iter().map(|&b| b as u8 as f64).collect();
    let grow = GrowConfig {
        criterion: Criterion::Gini,
        max_depth: cfg.max_depth,
        min_samples_leaf: cfg.min_samples_leaf,
        max_features: cfg.max_features.resolve(xt.cols()),
    };
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_for(seed, 1000 + t as u64);
            let mut w = vec![0.0; n];
            if cfg.bootstrap {
                for _ in 0..n {
                    w[rng.random_range(0..n)] += 1.0;
                }
            } else {
                w.iter_mut().for_each(|v| *v = 1.0);
            }
            let rows: Vec<usize> = (0..n).filter(|&i| w[i] > 0.0).collect();
            let g: Vec<f64> = y.iter().zip(&w).map(|(a, b)| a * b).collect();
            grow_tree(&data, rows, &g, &w, &w, &grow, &mut rng)
        })
        .collect();
    Ok(ForestModel { prep, trees })
}
