use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::blocks::build_vocab;
use super::schema::{FeatureGroup, FeatureSchema};
use super::snapshot::{assemble_snapshot, Corpora, Label, SnapshotExample, SnapshotInputs};
use super::FeaturizeError;
use crate::dates::serde_date;
use crate::extract::{CountryTable, DEFAULT_COUNTRY_WINDOW};

pub const DATASET_FORMAT: &str = "fundcast-dataset";
pub const DATASET_VERSION: u32 = 1;

fn date(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").expect("static date")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub train_cutoffs: Vec<NaiveDate>,
    pub test_cutoffs: Vec<NaiveDate>,
    pub horizon_days: i64,
    pub vocab_size: usize,
    pub web_window_days: i64,
    pub country_window: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            train_cutoffs: ["2014-09-01", "2015-09-01", "2016-09-01", "2017-09-01"].map(date).to_vec(),
            test_cutoffs: vec![date("2018-09-01")],
            horizon_days: 365,
            vocab_size: 500,
            web_window_days: 365,
            country_window: DEFAULT_COUNTRY_WINDOW,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<(), FeaturizeError> {
        if self.train_cutoffs.is_empty() {
            return Err(FeaturizeError::Config("at least one train cutoff required".into()));
        }
        if self.horizon_days <= 0 {
            return Err(FeaturizeError::Config(format!("horizon must be positive, got {}", self.horizon_days)));
        }
        if self.vocab_size == 0 {
            return Err(FeaturizeError::Config("vocab_size must be positive".into()));
        }
        if self.web_window_days <= 0 || self.country_window == 0 {
            return Err(FeaturizeError::Config("window sizes must be positive".into()));
        }
        let last_train = self.train_cutoffs.iter().max().expect("non-empty");
        if let Some(bad) = self.test_cutoffs.iter().find(|t| *t <= last_train) {
            return Err(FeaturizeError::OverlappingCutoffs { test: *bad, last_train: *last_train });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    /// Labeled positives.
    pub n_p: usize,
    /// Unlabeled.
    pub n_u: usize,
}

impl SplitCounts {
    pub fn of(examples: &[SnapshotExample]) -> Self {
        let n_p = examples.iter().filter(|e| e.label.is_positive()).count();
        Self { n_p, n_u: examples.len() - n_p }
    }

    pub fn positive_rate(&self) -> f64 {
        let n = self.n_p + self.n_u;
        if n == 0 {
            0.0
        } else {
            self.n_p as f64 / n as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotDataset {
    pub schema: FeatureSchema,
    pub config: DatasetConfig,
    pub train: Vec<SnapshotExample>,
    pub test: Vec<SnapshotExample>,
}

impl SnapshotDataset {
    pub fn train_counts(&self) -> SplitCounts {
        SplitCounts::of(&self.train)
    }

    pub fn test_counts(&self) -> SplitCounts {
        SplitCounts::of(&self.test)
    }

    pub fn schema_hash(&self) -> String {
        self.schema.hash()
    }

    pub fn summary(&self) -> String {
        let (tr, te) = (self.train_counts(), self.test_counts());
        format!(
            "train: {} examples, {} positive ({:.1}%); test: {} examples, {} positive ({:.1}%); {} features",
            tr.n_p + tr.n_u,
            tr.n_p,
            100.0 * tr.positive_rate(),
            te.n_p + te.n_u,
            te.n_p,
            100.0 * te.positive_rate(),
            self.schema.len()
        )
    }

    /// Drop whole feature groups from schema and every example.
    pub fn without_groups(&self, dropped: &[FeatureGroup]) -> SnapshotDataset {
        let cols = self.schema.columns_without(dropped);
        let project = |ex: &SnapshotExample| SnapshotExample {
            features: cols.iter().map(|&c| ex.features[c]).collect(),
            ..ex.clone()
        };
        SnapshotDataset {
            schema: self.schema.project(&cols),
            config: self.config.clone(),
            train: self.train.iter().map(project).collect(),
            test: self.test.iter().map(project).collect(),
        }
    }
}

/// Build the temporal train/test split: one example per (startup, cutoff),
/// vocabularies and language levels frozen from data dated before the last
/// train cutoff. Output is sorted by (startup_id, cutoff) within each split.
pub fn build_dataset(config: &DatasetConfig, corpora: &Corpora) -> Result<SnapshotDataset, FeaturizeError> {
    build_dataset_with(config, corpora, &CountryTable::default())
}

pub fn build_dataset_with(
    config: &DatasetConfig,
    corpora: &Corpora,
    countries: &CountryTable,
) -> Result<SnapshotDataset, FeaturizeError> {
    config.validate()?;
    let vocab_cutoff = *config.train_cutoffs.iter().max().expect("validated");
    let (hashtags, domains) = build_vocab(
        &corpora.tweet_stats,
        &corpora.search_pages,
        &corpora.startups,
        config.vocab_size,
        Some(vocab_cutoff),
    );
    let languages: Vec<String> = corpora
        .tweet_stats
        .iter()
        .filter(|s| s.month.last_day() < vocab_cutoff)
        .filter_map(|s| s.modal_language.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let schema = FeatureSchema::new(hashtags, domains, countries.countries(), languages);
    let inputs = SnapshotInputs::new(corpora, countries, config.country_window);

    let make_split = |cutoffs: &[NaiveDate]| -> Result<Vec<SnapshotExample>, FeaturizeError> {
        let mut cutoffs = cutoffs.to_vec();
        cutoffs.sort();
        cutoffs.dedup();
        let pairs: Vec<(&str, NaiveDate)> =
            inputs.startup_ids().iter().flat_map(|id| cutoffs.iter().map(move |d| (*id, *d))).collect();
        pairs
            .par_iter()
            .map(|(id, d)| assemble_snapshot(id, *d, config.horizon_days, config.web_window_days, &inputs, &schema))
            .collect()
    };
    let train = make_split(&config.train_cutoffs)?;
    let test = make_split(&config.test_cutoffs)?;
    let dataset = SnapshotDataset { schema, config: config.clone(), train, test };
    log::info!("{}", dataset.summary());
    Ok(dataset)
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    schema_hash: String,
    schema: FeatureSchema,
    config: DatasetConfig,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Split {
    Train,
    Test,
}

#[derive(Serialize, Deserialize)]
struct Row {
    split: Split,
    startup_id: String,
    #[serde(with = "serde_date")]
    cutoff: NaiveDate,
    label: Label,
    features: Vec<Option<f64>>,
}

/// Write the dataset file: a header line (schema, vocabularies, config and
/// schema hash) followed by one line per example. Missing values are `null`.
pub fn write_dataset<W: Write>(dataset: &SnapshotDataset, writer: W) -> std::io::Result<()> {
    let mut out = BufWriter::new(writer);
    let header = Header {
        format: DATASET_FORMAT.into(),
        version: DATASET_VERSION,
        schema_hash: dataset.schema.hash(),
        schema: dataset.schema.clone(),
        config: dataset.config.clone(),
    };
    serde_json::to_writer(&mut out, &header).map_err(std::io::Error::other)?;
    out.write_all(b"\n")?;
    for (split, examples) in [(Split::Train, &dataset.train), (Split::Test, &dataset.test)] {
        for ex in examples {
            let row = Row {
                split,
                startup_id: ex.startup_id.clone(),
                cutoff: ex.cutoff,
                label: ex.label,
                features: ex.features.iter().map(|v| (!v.is_nan()).then_some(*v)).collect(),
            };
            serde_json::to_writer(&mut out, &row).map_err(std::io::Error::other)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()
}

pub fn read_dataset<R: Read>(reader: R) -> Result<SnapshotDataset, FeaturizeError> {
    let mut lines = BufReader::new(reader).lines();
    let bad = |line: usize, msg: String| FeaturizeError::DatasetFile { line, message: msg };
    let first = lines.next().ok_or_else(|| bad(1, "empty dataset file".into()))?.map_err(|e| bad(1, e.to_string()))?;
    let header: Header = serde_json::from_str(&first).map_err(|e| bad(1, e.to_string()))?;
    if header.format != DATASET_FORMAT || header.version != DATASET_VERSION {
        return Err(bad(1, format!("unsupported dataset format {} v{}", header.format, header.version)));
    }
    let actual = header.schema.hash();
    if actual != header.schema_hash {
        return Err(FeaturizeError::SchemaHash { expected: header.schema_hash, actual });
    }
    let mut dataset =
        SnapshotDataset { schema: header.schema, config: header.config, train: Vec::new(), test: Vec::new() };
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(|e| bad(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(&line).map_err(|e| bad(line_no, e.to_string()))?;
        if row.features.len() != dataset.schema.len() {
            return Err(bad(line_no, format!("{} features, schema has {}", row.features.len(), dataset.schema.len())));
        }
        let ex = SnapshotExample {
            startup_id: row.startup_id,
            cutoff: row.cutoff,
            label: row.label,
            features: row.features.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
        };
        match row.split {
            Split::Train => dataset.train.push(ex),
            Split::Test => dataset.test.push(ex),
        }
    }
    Ok(dataset)
}
