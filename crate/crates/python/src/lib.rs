//! Python bindings: datasets, models, metrics and corpus helpers.
//!
//! Structured results cross the boundary as JSON and come back as plain
//! dicts and lists.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use fundcast_core::eval::{
    compare_seeds, corrected_auc as core_corrected_auc, estimate_noise as core_estimate_noise, evaluate_model,
    f_beta_at_k as core_f_beta_at_k, precision_at_k as core_precision_at_k, roc_auc as core_roc_auc, MetricConfig,
    NoiseModel,
};
use fundcast_core::extract::{extract_events as core_extract_events, FundingEvent, StartupIndex, VerbLexicon};
use fundcast_core::featurize::{
    build_dataset, read_dataset, write_dataset, Corpora, DatasetConfig, FeatureGroup, SnapshotDataset, SnapshotExample,
};
use fundcast_core::ingest::{
    load_corpus, AuditRecord, Record, SearchResultPage, SocialPresence, StartupRecord, TextItem, TweetStat,
};
use fundcast_core::learn::{predict, train, Matrix, Model as CoreModel, ModelKind, TrainConfig};
use fundcast_core::synth::{generate, SynthConfig};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

fn invalid(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn os(path: &Path, e: impl std::fmt::Display) -> PyErr {
    PyOSError::new_err(format!("{}: {e}", path.display()))
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(value).map_err(invalid)?;
    py.import("json")?.call_method1("loads", (s,))
}

fn from_py(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    let s: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&s).map_err(invalid)
}

fn load<T: Record>(path: &Path) -> PyResult<Vec<T>> {
    Ok(load_corpus::<T>(path).map_err(invalid)?.into_records())
}

fn kind_of(name: &str) -> PyResult<ModelKind> {
    ModelKind::parse(name).ok_or_else(|| {
        let names: Vec<&str> = ModelKind::ALL.iter().map(|k| k.name()).collect();
        invalid(format!("unknown model kind {name:?}; expected one of {}", names.join(", ")))
    })
}

/// Overlay `patch` onto `base`, rejecting keys that `base` does not have.
fn overlay(base: &mut Value, patch: &Value, path: &str) -> PyResult<()> {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                let sub = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get_mut(k) {
                    Some(slot) => overlay(slot, v, &sub)?,
                    None => return Err(invalid(format!("unknown config key {sub:?}"))),
                }
            }
            Ok(())
        }
        (slot, v) => {
            *slot = v.clone();
            Ok(())
        }
    }
}

/// `defaults` with the keys of an optional dict replaced.
fn with_overrides<T: Serialize + DeserializeOwned>(defaults: T, patch: Option<&Bound<'_, PyAny>>) -> PyResult<T> {
    let mut value = serde_json::to_value(defaults).map_err(invalid)?;
    if let Some(p) = patch {
        let mut p = from_py(p)?;
        if let Value::Object(m) = &mut p {
            m.remove("kind");
        }
        overlay(&mut value, &p, "")?;
    }
    serde_json::from_value(value).map_err(invalid)
}

fn split<'a>(d: &'a SnapshotDataset, name: &str) -> PyResult<&'a [SnapshotExample]> {
    match name {
        "train" => Ok(&d.train),
        "test" => Ok(&d.test),
        _ => Err(invalid(format!("split must be \"train\" or \"test\", got {name:?}"))),
    }
}

/// Temporal train/test snapshot dataset.
#[pyclass(module = "fundcast", frozen)]
struct Dataset {
    inner: SnapshotDataset,
}

#[pymethods]
impl Dataset {
    /// Build from a corpus directory holding the standard file names.
    /// Events are read from `events` when given, else extracted from the
    /// texts. `config` overrides dataset defaults.
    #[staticmethod]
    #[pyo3(signature = (corpus_dir, events = None, config = None))]
    fn build(
        py: Python<'_>,
        corpus_dir: PathBuf,
        events: Option<PathBuf>,
        config: Option<&Bound<'_, PyAny>>,
    ) -> PyResult<Self> {
        let cfg: DatasetConfig = with_overrides(DatasetConfig::default(), config)?;
        let file = |name: &str| corpus_dir.join(name);
        let startups: Vec<StartupRecord> = load(&file("startups.jsonl"))?;
        let events: Vec<FundingEvent> = match events {
            Some(p) => load(&p)?,
            None => {
                let texts: Vec<TextItem> = load(&file("texts.jsonl"))?;
                core_extract_events(&texts, &StartupIndex::build(&startups), &VerbLexicon::default())
            }
        };
        let corpora = Corpora {
            startups,
            events,
            tweet_stats: load::<TweetStat>(&file("tweet_stats.jsonl"))?,
            search_pages: load::<SearchResultPage>(&file("search_pages.jsonl"))?,
            social: load::<SocialPresence>(&file("social.jsonl"))?,
        };
        let inner = py.detach(|| build_dataset(&cfg, &corpora)).map_err(invalid)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let f = File::open(&path).map_err(|e| os(&path, e))?;
        Ok(Self { inner: read_dataset(BufReader::new(f)).map_err(invalid)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let f = File::create(&path).map_err(|e| os(&path, e))?;
        write_dataset(&self.inner, BufWriter::new(f)).map_err(|e| os(&path, e))
    }

    #[getter]
    fn schema_hash(&self) -> String {
        self.inner.schema_hash()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.schema.names().into_iter().map(String::from).collect()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.schema.len()
    }

    /// Positive and unlabeled counts of both splits.
    fn counts<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &serde_json::json!({ "train": self.inner.train_counts(), "test": self.inner.test_counts() }))
    }

    /// Feature rows of a split; missing values are NaN.
    #[pyo3(signature = (split = "train"))]
    fn rows(&self, split: &str) -> PyResult<Vec<Vec<f64>>> {
        Ok(self::split(&self.inner, split)?.iter().map(|e| e.features.clone()).collect())
    }

    #[pyo3(signature = (split = "train"))]
    fn labels(&self, split: &str) -> PyResult<Vec<bool>> {
        Ok(self::split(&self.inner, split)?.iter().map(|e| e.label.is_positive()).collect())
    }

    #[pyo3(signature = (split = "train"))]
    fn startup_ids(&self, split: &str) -> PyResult<Vec<String>> {
        Ok(self::split(&self.inner, split)?.iter().map(|e| e.startup_id.clone()).collect())
    }

    /// Copy with the named feature groups removed.
    fn without_groups(&self, groups: Vec<String>) -> PyResult<Self> {
        let dropped = groups
            .iter()
            .map(|g| FeatureGroup::parse(g).ok_or_else(|| invalid(format!("unknown feature group {g:?}"))))
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Self { inner: self.inner.without_groups(&dropped) })
    }

    fn __len__(&self) -> usize {
        self.inner.train.len() + self.inner.test.len()
    }

    fn __repr__(&self) -> String {
        format!("Dataset({})", self.inner.summary())
    }
}

/// Trained scorer bound to the feature schema it was trained on.
#[pyclass(module = "fundcast", frozen)]
struct Model {
    inner: CoreModel,
}

#[pymethods]
impl Model {
    /// Train on the train split. `config` overrides trainer defaults.
    #[staticmethod]
    #[pyo3(signature = (dataset, kind = "gbdt", seed = 0, config = None))]
    fn train(
        py: Python<'_>,
        dataset: &Dataset,
        kind: &str,
        seed: u64,
        config: Option<&Bound<'_, PyAny>>,
    ) -> PyResult<Self> {
        let cfg = with_overrides(TrainConfig::default_for(kind_of(kind)?), config)?;
        let d = &dataset.inner;
        let inner = py.detach(|| train(&cfg, &d.schema, &d.train, seed)).map_err(invalid)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let f = File::open(&path).map_err(|e| os(&path, e))?;
        Ok(Self { inner: CoreModel::from_reader(BufReader::new(f)).map_err(invalid)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let f = File::create(&path).map_err(|e| os(&path, e))?;
        self.inner.to_writer(BufWriter::new(f)).map_err(invalid)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: CoreModel::from_reader(text.as_bytes()).map_err(invalid)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(invalid)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.name()
    }

    #[getter]
    fn schema_hash(&self) -> String {
        self.inner.schema_hash.clone()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    /// Trainer settings used, as a dict.
    fn config<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.config)
    }

    /// Score raw feature rows. Widths are checked, the schema is not.
    fn score(&self, py: Python<'_>, rows: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        if let Some(bad) = rows.iter().find(|r| r.len() != rows[0].len()) {
            return Err(invalid(format!("ragged rows: {} and {} columns", rows[0].len(), bad.len())));
        }
        let x = Matrix::from_rows(&rows);
        py.detach(|| self.inner.score_rows(&x)).map_err(invalid)
    }

    /// Score a dataset split after checking its schema hash.
    #[pyo3(signature = (dataset, split = "test"))]
    fn predict(&self, py: Python<'_>, dataset: &Dataset, split: &str) -> PyResult<Vec<f64>> {
        let d = &dataset.inner;
        let examples = self::split(d, split)?;
        py.detach(|| predict(&self.inner, &d.schema, examples)).map_err(invalid)
    }

    /// Ranking metrics on the test split, noise-corrected when both
    /// `alpha` and `beta` are given.
    #[pyo3(signature = (dataset, k_values = vec![100, 200], f_beta = 0.1, alpha = None, beta = None))]
    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        dataset: &Dataset,
        k_values: Vec<usize>,
        f_beta: f64,
        alpha: Option<f64>,
        beta: Option<f64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let noise = match (alpha, beta) {
            (Some(a), Some(b)) => Some(NoiseModel::new(a, b).map_err(invalid)?),
            (None, None) => None,
            _ => return Err(invalid("give both alpha and beta or neither")),
        };
        let cfg = MetricConfig { k_values, f_beta, noise };
        let report = py.detach(|| evaluate_model(&self.inner, &dataset.inner, &cfg)).map_err(invalid)?;
        to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(kind={:?}, n_features={}, schema_hash={:?})",
            self.kind(),
            self.inner.n_features,
            self.inner.schema_hash
        )
    }
}

/// Names of the trainable model kinds.
#[pyfunction]
fn model_kinds() -> Vec<&'static str> {
    ModelKind::ALL.iter().map(|k| k.name()).collect()
}

/// Default trainer settings for a kind, as a dict.
#[pyfunction]
fn default_config<'py>(py: Python<'py>, kind: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &TrainConfig::default_for(kind_of(kind)?))
}

#[pyfunction]
fn roc_auc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    core_roc_auc(&scores, &labels).map_err(invalid)
}

#[pyfunction]
fn precision_at_k(scores: Vec<f64>, labels: Vec<bool>, k: usize) -> PyResult<f64> {
    core_precision_at_k(&scores, &labels, k).map_err(invalid)
}

#[pyfunction]
#[pyo3(signature = (scores, labels, k, beta = 0.1))]
fn f_beta_at_k(scores: Vec<f64>, labels: Vec<bool>, k: usize, beta: f64) -> PyResult<f64> {
    core_f_beta_at_k(&scores, &labels, k, beta).map_err(invalid)
}

/// AUC against clean labels recovered from the AUC against noisy labels.
#[pyfunction]
fn corrected_auc(auc: f64, alpha: f64, beta: f64) -> PyResult<f64> {
    core_corrected_auc(auc, NoiseModel::new(alpha, beta).map_err(invalid)?).map_err(invalid)
}

/// Two-sided rank-sum test; returns `statistic`, `p_value` and `exact`.
#[pyfunction]
fn rank_sum_test<'py>(py: Python<'py>, a: Vec<f64>, b: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &compare_seeds(&a, &b).map_err(invalid)?)
}

/// Label-noise rates and intervals from an audit corpus file.
#[pyfunction]
fn estimate_noise<'py>(py: Python<'py>, audits: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let records: Vec<AuditRecord> = load(&audits)?;
    to_py(py, &core_estimate_noise(&records).map_err(invalid)?)
}

/// Funding events found in a text corpus, as a list of dicts.
#[pyfunction]
fn extract_events<'py>(py: Python<'py>, startups: PathBuf, texts: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let startups: Vec<StartupRecord> = load(&startups)?;
    let texts: Vec<TextItem> = load(&texts)?;
    let events = py.detach(|| core_extract_events(&texts, &StartupIndex::build(&startups), &VerbLexicon::default()));
    to_py(py, &events)
}

/// Write a seeded synthetic corpus to `out_dir`; returns the startup count.
#[pyfunction]
#[pyo3(signature = (out_dir, n_startups = 500, seed = 7))]
fn generate_corpus(py: Python<'_>, out_dir: PathBuf, n_startups: usize, seed: u64) -> PyResult<usize> {
    if n_startups == 0 {
        return Err(invalid("n_startups must be positive"));
    }
    let corpus = py.detach(|| generate(&SynthConfig { n_startups, seed, ..SynthConfig::default() }));
    corpus.write_to_dir(&out_dir).map_err(|e| os(&out_dir, e))?;
    Ok(corpus.startups.len())
}

#[pymodule]
fn fundcast(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(model_kinds, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(precision_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(f_beta_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(corrected_auc, m)?)?;
    m.add_function(wrap_pyfunction!(rank_sum_test, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_noise, m)?)?;
    m.add_function(wrap_pyfunction!(extract_events, m)?)?;
    m.add_function(wrap_pyfunction!(generate_corpus, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
