//! Scoring models trained under the PN and positive-unlabeled regimes.
//!
//! Every trainer consumes a feature schema plus training snapshots and
//! returns a [`Model`], a self-describing container that refuses to score
//! vectors built under a different schema.

mod forest;
mod gbdt;
mod linear;
mod matrix;
mod mlp;
mod model;
mod optim;
mod prep;
mod pu_auc;
mod risk;
mod stacked;
mod tree;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use forest::{train_forest, ForestConfig, ForestModel, MaxFeatures};
pub use gbdt::{train_gbdt, GbdtConfig, GbdtModel};
pub use linear::{linear_objective, train_linear, LinearConfig, LinearLoss, LinearModel};
pub use matrix::{labels_of, Matrix};
pub use mlp::{train_mlp, MlpConfig, MlpModel, MlpNet};
pub use model::{predict, train, Model, ModelKind, ModelParams, Scorer, TrainConfig, MODEL_VERSION};
pub use optim::{lbfgs, Adam, LbfgsConfig};
pub use prep::{target_encode, CategoryStats, EncodingConfig, Prep, Standardizer, TargetEncoder};
pub use pu_auc::{pu_auc_risk, pu_auc_risk_grad, train_pu_auc, KernelConfig, KernelModel, Surrogate};
pub use risk::{
    logistic_loss, nnpu_step_score_grad, pn_risk, pu_risk, pu_risk_score_grad, sigmoid, sigmoid_loss,
    sigmoid_loss_grad, ClassPrior, LossKind, RiskBreakdown,
};
pub use stacked::{train_stacked, GroupModel, StackedConfig, StackedModel};
pub use tree::{Tree, TreeNode};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("{0} must not be empty")]
    EmptySet(&'static str),
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize, loss: f64 },
    #[error("kernel width must be positive, got {0}")]
    KernelWidth(f64),
    #[error("schema hash mismatch: model expects {expected}, data has {actual}")]
    SchemaMismatch { expected: String, actual: String },
    #[error("feature vector has {got} values, model expects {expected}")]
    Width { expected: usize, got: usize },
    #[error("unsupported model file version {0}")]
    Version(u32),
    #[error("model file: {0}")]
    Format(#[from] serde_json::Error),
}

/// Independent deterministic stream for `(seed, stream)`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn check_two_classes(labels: &[bool]) -> Result<(), LearnError> {
    let pos = labels.iter().filter(|&&y| y).count();
    if labels.is_empty() {
        return Err(LearnError::EmptySet("training set"));
    }
    if pos == 0 || pos == labels.len() {
        return Err(LearnError::SingleClass);
    }
    Ok(())
}
