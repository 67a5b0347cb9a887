//! Startup funding prediction from openly available web data.
//!
//! The crate is organised as a pipeline:
//!
//! * [`ingest`] reads line-delimited JSON corpora (startups, texts, tweet
//!   statistics, search pages, social presence, audits);
//! * [`extract`] detects funding events in headlines and tweets and infers
//!   country of origin and creation dates;
//! * [`featurize`] builds leakage-free feature snapshots at cutoff dates and
//!   the temporal train/test split;
//! * [`learn`] trains PN and positive-unlabeled scorers (logistic regression,
//!   MLP with sigmoid/uPU/nnPU risks, kernel PU-AUC, random forest, GBDT and a
//!   group-stacked ensemble);
//! * [`eval`] computes ranking metrics, noise-corrected AUC, rank-sum tests,
//!   ablations and Monte-Carlo Shapley attributions.
//!
//! [`synth`] generates seeded corpora with a planted signal for demos and
//! tests.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dates;
pub mod eval;
pub mod extract;
pub mod featurize;
pub mod hashing;
pub mod ingest;
pub mod learn;
pub mod synth;
