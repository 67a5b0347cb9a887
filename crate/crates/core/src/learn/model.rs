use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forest::{train_forest, ForestConfig, ForestModel};
use super::gbdt::{train_gbdt, GbdtConfig, GbdtModel};
use super::linear::{train_linear, LinearConfig, LinearModel};
use super::matrix::{labels_of, Matrix};
use super::mlp::{train_mlp, MlpConfig, MlpModel};
use super::pu_auc::{train_pu_auc, KernelConfig, KernelModel};
use super::stacked::{train_stacked, StackedConfig, StackedModel};
use super::LearnError;
use crate::featurize::{FeatureSchema, SnapshotExample};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Mlp,
    PuAucKernel,
    RandomForest,
    Gbdt,
    Stacked,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Linear,
        ModelKind::Mlp,
        ModelKind::PuAucKernel,
        ModelKind::RandomForest,
        ModelKind::Gbdt,
        ModelKind::Stacked,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Mlp => "mlp",
            ModelKind::PuAucKernel => "pu_auc_kernel",
            ModelKind::RandomForest => "random_forest",
            ModelKind::Gbdt => "gbdt",
            ModelKind::Stacked => "stacked",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Trainer selection plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainConfig {
    Linear(LinearConfig),
    Mlp(MlpConfig),
    PuAucKernel(KernelConfig),
    RandomForest(ForestConfig),
    Gbdt(GbdtConfig),
    Stacked(StackedConfig),
}

impl TrainConfig {
    /// Defaults for a kind.
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Linear => TrainConfig::Linear(LinearConfig::default()),
            ModelKind::Mlp => TrainConfig::Mlp(MlpConfig::default()),
            ModelKind::PuAucKernel => TrainConfig::PuAucKernel(KernelConfig::default()),
            ModelKind::RandomForest => TrainConfig::RandomForest(ForestConfig::default()),
            ModelKind::Gbdt => TrainConfig::Gbdt(GbdtConfig::default()),
            ModelKind::Stacked => TrainConfig::Stacked(StackedConfig::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            TrainConfig::Linear(_) => ModelKind::Linear,
            TrainConfig::Mlp(_) => ModelKind::Mlp,
            TrainConfig::PuAucKernel(_) => ModelKind::PuAucKernel,
            TrainConfig::RandomForest(_) => ModelKind::RandomForest,
            TrainConfig::Gbdt(_) => ModelKind::Gbdt,
            TrainConfig::Stacked(_) => ModelKind::Stacked,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelParams {
    Linear(LinearModel),
    Mlp(MlpModel),
    PuAucKernel(KernelModel),
    RandomForest(ForestModel),
    Gbdt(GbdtModel),
    Stacked(StackedModel),
}

/// Anything that maps a raw feature vector to a score.
pub trait Scorer: Sync {
    fn score(&self, row: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64 + Sync> Scorer for F {
    fn score(&self, row: &[f64]) -> f64 {
        self(row)
    }
}

/// Trained scorer with the schema hash and config it was built with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub version: u32,
    pub kind: ModelKind,
    pub schema_hash: String,
    pub n_features: usize,
    pub seed: u64,
    pub config: TrainConfig,
    pub params: ModelParams,
}

impl Scorer for Model {
    fn score(&self, row: &[f64]) -> f64 {
        match &self.params {
            ModelParams::Linear(m) => m.score(row),
            ModelParams::Mlp(m) => m.score(row),
            ModelParams::PuAucKernel(m) => m.score(row),
            ModelParams::RandomForest(m) => m.score(row),
            ModelParams::Gbdt(m) => m.score(row),
            ModelParams::Stacked(m) => m.score(row),
        }
    }
}

impl Model {
    pub fn check_schema(&self, schema_hash: &str) -> Result<(), LearnError> {
        if self.schema_hash != schema_hash {
            return Err(LearnError::SchemaMismatch { expected: self.schema_hash.clone(), actual: schema_hash.into() });
        }
        Ok(())
    }

    /// Score raw rows; widths are checked, the schema hash is not.
    pub fn score_rows(&self, x: &Matrix) -> Result<Vec<f64>, LearnError> {
        if x.rows() > 0 && x.cols() != self.n_features {
            return Err(LearnError::Width { expected: self.n_features, got: x.cols() });
        }
        Ok((0..x.rows()).into_par_iter().map(|i| self.score(x.row(i))).collect())
    }

    pub fn to_writer<W: Write>(&self, w: W) -> Result<(), LearnError> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn from_reader<R: Read>(r: R) -> Result<Model, LearnError> {
        let value: serde_json::Value = serde_json::from_reader(r)?;
        let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != MODEL_VERSION {
            return Err(LearnError::Version(version));
        }
        Ok(serde_json::from_value(value)?)
    }
}

/// Train any model kind on the labeled-positive/unlabeled training examples.
pub fn train(
    config: &TrainConfig,
    schema: &FeatureSchema,
    examples: &[SnapshotExample],
    seed: u64,
) -> Result<Model, LearnError> {
    let x = Matrix::from_examples(examples);
    if x.rows() > 0 && x.cols() != schema.len() {
        return Err(LearnError::Width { expected: schema.len(), got: x.cols() });
    }
    let y = labels_of(examples);
    let params = match config {
        TrainConfig::Linear(c) => ModelParams::Linear(train_linear(schema, &x, &y, c, seed)?),
        TrainConfig::Mlp(c) => ModelParams::Mlp(train_mlp(schema, &x, &y, c, seed)?),
        TrainConfig::PuAucKernel(c) => ModelParams::PuAucKernel(train_pu_auc(schema, &x, &y, c, seed)?),
        TrainConfig::RandomForest(c) => ModelParams::RandomForest(train_forest(schema, &x, &y, c, seed)?),
        TrainConfig::Gbdt(c) => ModelParams::Gbdt(train_gbdt(schema, &x, &y, c, seed)?),
        TrainConfig::Stacked(c) => ModelParams::Stacked(train_stacked(schema, &x, &y, c, seed)?),
    };
    Ok(Model {
        version: MODEL_VERSION,
        kind: config.kind(),
        schema_hash: schema.hash(),
        n_features: schema.len(),
        seed,
        config: config.clone(),
        params,
    })
}

/// Score examples built under `schema`; refuses a schema other than the
/// model's own.
pub fn predict(model: &Model, schema: &FeatureSchema, examples: &[SnapshotExample]) -> Result<Vec<f64>, LearnError> {
    model.check_schema(&schema.hash())?;
    if let Some(bad) = examples.iter().find(|e| e.features.len() != model.n_features) {
        return Err(LearnError::Width { expected: model.n_features, got: bad.features.len() });
    }
    Ok(examples.par_iter().map(|e| model.score(&e.features)).collect())
}
