use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::prep::{EncodingConfig, Prep};
use super::risk::{logistic_loss, sigmoid};
use super::tree::{grow_tree, Binned, Criterion, GrowConfig, Tree};
use super::{check_two_classes, rng_for, LearnError};
use crate::featurize::FeatureSchema;

/// Halvings tried before a round that cannot lower the loss ends training.
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtConfig {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    pub min_samples_leaf: usize,
    pub max_bins: usize,
    pub encoding: EncodingConfig,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        Self {
            n_trees: 200,
            learning_rate: 0.1,
            max_depth: 6,
            lambda: 100.0,
            min_samples_leaf: 1,
            max_bins: 255,
            encoding: EncodingConfig::default(),
        }
    }
}

impl GbdtConfig {
    fn validate(&self) -> Result<(), LearnError> {
        if !(self.learning_rate > 0.0) || !(self.lambda >= 0.0) || self.max_depth == 0 {
            return Err(LearnError::InvalidConfig(
                "gbdt needs a positive learning rate and depth and a non-negative lambda".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub prep: Prep,
    pub trees: Vec<Tree>,
    /// Mean training logistic loss before the first and after every round.
    pub train_loss: Vec<f64>,
}

impl GbdtModel {
    pub fn score(&self, row: &[f64]) -> f64 {
        ensemble_score(&self.trees, &self.prep.transform_row(row))
    }
}

pub(crate) fn ensemble_score(trees: &[Tree], row: &[f64]) -> f64 {
    trees.iter().map(|t| t.predict(row)).sum()
}

fn mean_loss(f: &[f64], y: &[bool]) -> f64 {
    f.iter().zip(y).map(|(&s, &l)| logistic_loss(s, if l { 1.0 } else { -1.0 })).sum::<f64>() / f.len().max(1) as f64
}

/// Newton boosting of logistic loss from a zero base score on a prepared
/// matrix. A round whose step would raise the training loss is halved until
/// it does not.
pub(crate) fn boost(x: &Matrix, labels: &[bool], cfg: &GbdtConfig, seed: u64) -> (Vec<Tree>, Vec<f64>) {
    let data = Binned::new(x, cfg.max_bins);
    let n = x.rows();
    let grow = GrowConfig {
        criterion: Criterion::Newton { lambda: cfg.lambda },
        max_depth: Some(cfg.max_depth),
        min_samples_leaf: cfg.min_samples_leaf,
        max_features: None,
    };
    let mut rng = rng_for(seed, 4);
    let ones = vec![1.0; n];
    let mut f = vec![0.0; n];
    let mut loss = mean_loss(&f, labels);
    let mut history = vec![loss];
    let mut trees = Vec::with_capacity(cfg.n_trees);
    for _ in 0..cfg.n_trees {
        let (mut g, mut h) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for (&s, &y) in f.iter().zip(labels) {
            let p = sigmoid(s);
            g.push(p - y as u8 as f64);
            h.push((p * (1.0 - p)).max(1e-16));
        }
        let mut tree = grow_tree(&data, (0..n).collect(), &g, &h, &ones, &grow, &mut rng);
        let raw: Vec<f64> = x.iter_rows().map(|r| tree.predict(r)).collect();
        let mut step = cfg.learning_rate;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand: Vec<f64> = f.iter().zip(&raw).map(|(a, b)| a + step * b).collect();
            let l = mean_loss(&cand, labels);
            if l <= loss {
                accepted = Some((cand, l));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, l)) = accepted else { break };
        tree.scale_leaves(step);
        f = cand;
        loss = l;
        history.push(loss);
        trees.push(tree);
    }
    (trees, history)
}

pub fn train_gbdt(
    schema: &FeatureSchema,
    x: &Matrix,
    labels: &[bool],
    cfg: &GbdtConfig,
    seed: u64,
) -> Result<GbdtModel, LearnError> {
    check_two_classes(labels)?;
    cfg.validate()?;
    let (prep, xt) = Prep::fit(x, labels, &schema.categorical_columns(), cfg.encoding, false, seed)?;
    let (trees, train_loss) = boost(&xt, labels, cfg, seed);
    Ok(GbdtModel { prep, trees, train_loss })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_is_fit_at_depth_two() {
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
        let y = [false, true, true, false];
        let cfg = GbdtConfig { n_trees: 50, learning_rate: 0.5, max_depth: 2, lambda: 0.1, ..GbdtConfig::default() };
        let (trees, loss) = boost(&x, &y, &cfg, 1);
        for i in 0..4 {
            assert_eq!(ensemble_score(&trees, x.row(i)) > 0.0, y[i]);
        }
        assert!(loss.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn huge_lambda_gives_zero_leaves() {
        let x = Matrix::from_rows(&(0..20).map(|i| vec![i as f64]).collect::<Vec<_>>());
        let y: Vec<bool> = (0..20).map(|i| i > 9).collect();
        let cfg = GbdtConfig { n_trees: 5, lambda: 1e15, ..GbdtConfig::default() };
        let (trees, _) = boost(&x, &y, &cfg, 1);
        assert!(x.iter_rows().all(|r| ensemble_score(&trees, r).abs() < 1e-12));
    }
}
