//! Group-stacked ensemble: one logistic regression per semantic feature
//! group, whose out-of-fold scores join the non-sparse raw features as
//! inputs of a boosted tree model.

use serde::{Deserialize, Serialize};

use super::gbdt::{boost, ensemble_score, GbdtConfig};
use super::linear::{fit_prepared, LinearConfig};
use super::matrix::{dot, Matrix};
use super::prep::{fold_assignment, EncodingConfig, Prep, Standardizer};
use super::tree::Tree;
use super::{check_two_classes, LearnError};
use crate::featurize::{FeatureGroup, FeatureSchema};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StackedConfig {
    pub folds: usize,
    pub group_model: LinearConfig,
    pub final_model: GbdtConfig,
    pub encoding: EncodingConfig,
}

impl Default for StackedConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            group_model: LinearConfig { l2: 1e-2, ..LinearConfig::default() },
            final_model: GbdtConfig::default(),
            encoding: EncodingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupModel {
    pub group: FeatureGroup,
    pub columns: Vec<usize>,
    pub scaler: Standardizer,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl GroupModel {
    fn score(&self, prepared: &[f64]) -> f64 {
        let mut r: Vec<f64> = self.columns.iter().map(|&c| prepared[c]).collect();
        self.scaler.apply_row(&mut r);
        dot(&r, &self.weights) + self.bias
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedModel {
    pub prep: Prep,
    pub groups: Vec<GroupModel>,
    /// Raw (encoded) columns fed straight to the final model.
    pub passthrough: Vec<usize>,
    pub trees: Vec<Tree>,
    pub train_loss: Vec<f64>,
}

impl StackedModel {
    /// Input row of the final model for one prepared example.
    fn final_row(&self, prepared: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = self.passthrough.iter().map(|&c| prepared[c]).collect();
        r.extend(self.groups.iter().map(|g| g.score(prepared)));
        r
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        ensemble_score(&self.trees, &self.final_row(&self.prep.transform_row(row)))
    }

    /// Width of the final model's input.
    pub fn combined_width(&self) -> usize {
        self.passthrough.len() + self.groups.len()
    }
}

pub fn train_stacked(
    schema: &FeatureSchema,
    x: &Matrix,
    labels: &[bool],
    cfg: &StackedConfig,
    seed: u64,
) -> Result<StackedModel, LearnError> {
    check_two_classes(labels)?;
    if cfg.folds < 2 {
        return Err(LearnError::InvalidConfig(format!("stacking needs at least 2 folds, got {}", cfg.folds)));
    }
    let (prep, xt) = Prep::fit(x, labels, &schema.categorical_columns(), cfg.encoding, false, seed)?;
    let n = xt.rows();
    let fold = fold_assignment(n, cfg.folds, seed ^ 0x5eed);

    let mut groups = Vec::new();
    let mut oof_columns = Vec::new();
    for group in FeatureGroup::ALL {
        let columns = schema.group_columns(group);
        if columns.is_empty() {
            log::warn!("feature group {} has no columns; skipped", group.name());
            continue;
        }
        let mut xg = xt.select_columns(&columns);
        let scaler = Standardizer::fit(&xg);
        for i in 0..n {
            scaler.apply_row(xg.row_mut(i));
        }
        let mut oof = vec![0.0; n];
        for f in 0..cfg.folds {
            let train_rows: Vec<usize> = (0..n).filter(|&i| fold[i] != f).collect();
            let held: Vec<usize> = (0..n).filter(|&i| fold[i] == f).collect();
            if held.is_empty() {
                continue;
            }
            let ty: Vec<bool> = train_rows.iter().map(|&i| labels[i]).collect();
            let (w, b) = fit_prepared(&xg.select_rows(&train_rows), &ty, &cfg.group_model)?;
            for i in held {
                oof[i] = dot(xg.row(i), &w) + b;
            }
        }
        let (weights, bias) = fit_prepared(&xg, labels, &cfg.group_model)?;
        groups.push(GroupModel { group, columns, scaler, weights, bias });
        oof_columns.push(oof);
    }

    let passthrough: Vec<usize> = (0..schema.len()).filter(|&c| !schema.entries[c].sparse).collect();
    let mut combined = xt.select_columns(&passthrough);
    if !oof_columns.is_empty() {
        let extra: Vec<Vec<f64>> = (0..n).map(|i| oof_columns.iter().map(|c| c[i]).collect()).collect();
        combined = combined.hstack(&Matrix::from_rows(&extra));
    }
    let (trees, train_loss) = boost(&combined, labels, &cfg.final_model, seed);
    Ok(StackedModel { prep, groups, passthrough, trees, train_loss })
}
