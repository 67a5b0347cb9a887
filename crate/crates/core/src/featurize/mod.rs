//! Leakage-free feature snapshots and the temporal train/test split.
//!
//! A snapshot of startup `s` at cutoff `d` only looks at records dated
//! strictly before `d`; its label looks at funding events in
//! `(d, d + horizon]`.

mod blocks;
mod dataset;
mod schema;
mod snapshot;

use chrono::NaiveDate;
use thiserror::Error;

pub use blocks::{
    build_vocab, financial_features, is_relevant, name_variants, twitter_features, web_features, FinancialFeatures,
    MonthSlot, TwitterBlock, WebBlock,
};
pub use dataset::{
    build_dataset, build_dataset_with, read_dataset, write_dataset, DatasetConfig, SnapshotDataset, SplitCounts,
    DATASET_FORMAT, DATASET_VERSION,
};
pub use schema::{FeatureEntry, FeatureGroup, FeatureKind, FeatureSchema, TWITTER_MONTHS};
pub use snapshot::{assemble_snapshot, Corpora, Label, SnapshotExample, SnapshotInputs};

#[derive(Debug, Error)]
pub enum FeaturizeError {
    #[error("unknown startup id {0:?}")]
    UnknownStartup(String),
    #[error("invalid dataset config: {0}")]
    Config(String),
    #[error("test cutoff {test} is not after the last train cutoff {last_train}")]
    OverlappingCutoffs { test: NaiveDate, last_train: NaiveDate },
    #[error("feature vector has {got} values, schema expects {expected}")]
    SchemaMismatch { expected: usize, got: usize },
    #[error("schema hash mismatch: header says {expected}, content hashes to {actual}")]
    SchemaHash { expected: String, actual: String },
    #[error("dataset file line {line}: {message}")]
    DatasetFile { line: usize, message: String },
}
