//! Ranking metrics, noise-corrected AUC, rank-sum tests, group ablation
//! and Monte-Carlo Shapley attribution.

mod metrics;
mod noise;
mod ranksum;
mod report;
mod shapley;

use thiserror::Error;

use crate::learn::LearnError;

pub use metrics::{f_beta, f_beta_at_k, midranks, precision_at_k, ranking, roc_auc};
pub use noise::{clamp_unit, clopper_pearson, corrected_auc, estimate_noise, NoiseEstimate, NoiseModel};
pub use ranksum::{compare_seeds, RankSumTest, EXACT_LIMIT};
pub use report::{
    ablate_groups, country_counts, evaluate_model, evaluate_scores, write_ablation_csv, write_country_csv, AblationRow,
    AtK, CountryCount, EvaluationReport, MetricConfig,
};
pub use shapley::{
    explain_examples, shapley_attribution, summarize_attributions, write_beeswarm_csv, Attribution, AttributionSummary,
    BeeswarmRow, ShapleyConfig,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("k = {k} is outside 1..={n}")]
    InvalidK { k: usize, n: usize },
    #[error("no positive labels")]
    NoPositives,
    #[error("both positive and negative labels are required")]
    MissingClass,
    #[error("noise rates need 0 <= alpha < beta <= 1, got alpha = {alpha}, beta = {beta}")]
    NoiseOrder { alpha: f64, beta: f64 },
    #[error("rank-sum test needs at least 3 values per sample, got {a} and {b}")]
    TooFewSamples { a: usize, b: usize },
    #[error("background set is empty")]
    EmptyBackground,
    #[error("{0}")]
    InvalidInput(String),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
