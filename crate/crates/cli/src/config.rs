//! Run configuration: built-in defaults, then a TOML file, then flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fundcast_core::eval::{MetricConfig, NoiseModel, ShapleyConfig};
use fundcast_core::featurize::DatasetConfig;
use fundcast_core::learn::{
    ForestConfig, GbdtConfig, KernelConfig, LinearConfig, MlpConfig, ModelKind, StackedConfig, TrainConfig,
};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::CliError;

/// Environment variable naming the config file used when `--config` is absent.
pub const CONFIG_ENV: &str = "FUNDCAST_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Master seed. Required.
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub output_dir: PathBuf,
    pub corpora: CorporaPaths,
    pub dataset: DatasetConfig,
    pub model: ModelSection,
    pub metrics: MetricsSection,
    pub noise: NoiseSection,
    pub explain: ExplainSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            workers: 0,
            output_dir: PathBuf::from("out"),
            corpora: CorporaPaths::default(),
            dataset: DatasetConfig::default(),
            model: ModelSection::default(),
            metrics: MetricsSection::default(),
            noise: NoiseSection::default(),
            explain: ExplainSection::default(),
        }
    }
}

/// Corpus files. Relative names are resolved against `dir` when it is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorporaPaths {
    pub dir: Option<PathBuf>,
    pub startups: PathBuf,
    pub texts: PathBuf,
    pub tweet_stats: PathBuf,
    pub search_pages: PathBuf,
    pub social: PathBuf,
    pub audits: PathBuf,
    /// Replacement fundraising-verb lexicon.
    pub lexicon: Option<PathBuf>,
    /// Replacement dialing-code table.
    pub dialing_codes: Option<PathBuf>,
}

impl Default for CorporaPaths {
    fn default() -> Self {
        Self {
            dir: None,
            startups: "startups.jsonl".into(),
            texts: "texts.jsonl".into(),
            tweet_stats: "tweet_stats.jsonl".into(),
            search_pages: "search_pages.jsonl".into(),
            social: "social.jsonl".into(),
            audits: "audits.jsonl".into(),
            lexicon: None,
            dialing_codes: None,
        }
    }
}

impl CorporaPaths {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }
}

/// The trainer to run plus one hyperparameter table per kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub linear: LinearConfig,
    pub mlp: MlpConfig,
    pub pu_auc_kernel: KernelConfig,
    pub random_forest: ForestConfig,
    pub gbdt: GbdtConfig,
    pub stacked: StackedConfig,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            kind: ModelKind::Gbdt,
            linear: LinearConfig::default(),
            mlp: MlpConfig::default(),
            pu_auc_kernel: KernelConfig::default(),
            random_forest: ForestConfig::default(),
            gbdt: GbdtConfig::default(),
            stacked: StackedConfig::default(),
        }
    }
}

impl ModelSection {
    pub fn train_config(&self) -> TrainConfig {
        match self.kind {
            ModelKind::Linear => TrainConfig::Linear(self.linear.clone()),
            ModelKind::Mlp => TrainConfig::Mlp(self.mlp.clone()),
            ModelKind::PuAucKernel => TrainConfig::PuAucKernel(self.pu_auc_kernel.clone()),
            ModelKind::RandomForest => TrainConfig::RandomForest(self.random_forest.clone()),
            ModelKind::Gbdt => TrainConfig::Gbdt(self.gbdt.clone()),
            ModelKind::Stacked => TrainConfig::Stacked(self.stacked.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsSection {
    pub k_values: Vec<usize>,
    pub f_beta: f64,
}

impl Default for MetricsSection {
    fn default() -> Self {
        let m = MetricConfig::default();
        Self { k_values: m.k_values, f_beta: m.f_beta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSource {
    /// Use `alpha` and `beta` as given.
    Fixed,
    /// Estimate from the audit corpus.
    Audit,
    /// Report the raw AUC only.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSection {
    pub source: NoiseSource,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { source: NoiseSource::Fixed, alpha: 0.06, beta: 0.915 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainSection {
    /// Number of highest-scored test examples to explain.
    pub top: usize,
    pub permutations: usize,
    pub background_rows: usize,
}

impl Default for ExplainSection {
    fn default() -> Self {
        let s = ShapleyConfig::default();
        Self { top: 20, permutations: s.permutations, background_rows: s.background_rows }
    }
}

impl RunConfig {
    pub fn seed(&self) -> u64 {
        self.seed.expect("validated")
    }

    pub fn metric_config(&self, noise: Option<NoiseModel>) -> MetricConfig {
        MetricConfig { k_values: self.metrics.k_values.clone(), f_beta: self.metrics.f_beta, noise }
    }

    pub fn shapley_config(&self) -> ShapleyConfig {
        ShapleyConfig {
            permutations: self.explain.permutations,
            background_rows: self.explain.background_rows,
            seed: self.seed(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        if self.seed.is_none() {
            return bad("seed is required: set `seed` in the config file or pass --seed".into());
        }
        self.dataset.validate().map_err(|e| CliError::Validation(e.to_string()))?;
        self.metric_config(None).validate().map_err(|e| CliError::Validation(e.to_string()))?;
        if self.noise.source == NoiseSource::Fixed {
            NoiseModel::new(self.noise.alpha, self.noise.beta).map_err(|e| CliError::Validation(e.to_string()))?;
        }
        if self.explain.top == 0 || self.explain.permutations == 0 || self.explain.background_rows == 0 {
            return bad("explain.top, explain.permutations and explain.background_rows must be positive".into());
        }
        Ok(())
    }
}

/// Where the final value of a config key came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Default,
    File,
    Flag,
}

#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub file: Option<PathBuf>,
    pub overrides: Vec<String>,
    /// Layer that supplied each key set outside the defaults, by dotted path.
    pub sources: BTreeMap<String, Layer>,
}

fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn leaf_paths(t: &Table, prefix: &str, out: &mut Vec<String>) {
    for (k, v) in t {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(inner) if !inner.is_empty() => leaf_paths(inner, &path, out),
            _ => out.push(path),
        }
    }
}

fn has_path(t: &Table, path: &str) -> bool {
    let mut cur = t;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, p) in parts.iter().enumerate() {
        match cur.get(*p) {
            Some(Value::Table(inner)) if i + 1 < parts.len() => cur = inner,
            Some(_) if i + 1 == parts.len() => return true,
            _ => return false,
        }
    }
    false
}

/// Parse `key.path=value`; the value is read as a TOML literal and falls
/// back to a plain string.
pub fn parse_assignment(raw: &str) -> Result<Table, CliError> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| CliError::Validation(format!("override {raw:?} is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Validation(format!("override {raw:?} has an empty key")));
    }
    let value = value.trim();
    let parsed = match format!("v = {value}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("present"),
        Err(_) => Value::String(value.to_string()),
    };
    let mut table = Table::new();
    let mut cur = &mut table;
    let parts: Vec<&str> = key.split('.').collect();
    for p in &parts[..parts.len() - 1] {
        cur = match cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new())) {
            Value::Table(t) => t,
            _ => unreachable!(),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(table)
}

fn to_table(c: &RunConfig) -> Table {
    match Value::try_from(c).expect("config serializes to TOML") {
        Value::Table(t) => t,
        _ => unreachable!(),
    }
}

/// Layer defaults, the config file and flag overrides, then validate.
pub fn resolve(file: Option<&Path>, overrides: &[String]) -> Result<Resolved, CliError> {
    let mut merged = to_table(&RunConfig::default());
    let file_table = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("config file {}: {e}", path.display())))?;
            text.parse::<Table>().map_err(|e| CliError::Validation(format!("config file {}: {e}", path.display())))?
        }
        None => Table::new(),
    };
    let mut flag_table = Table::new();
    for raw in overrides {
        merge(&mut flag_table, parse_assignment(raw)?);
    }
    merge(&mut merged, file_table.clone());
    merge(&mut merged, flag_table.clone());

    let config: RunConfig = Value::Table(merged.clone())
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Validation(format!("config: {}", e.message())))?;
    let echoed = to_table(&config);
    let mut given = Vec::new();
    leaf_paths(&file_table, "", &mut given);
    leaf_paths(&flag_table, "", &mut given);
    if let Some(unknown) = given.iter().find(|p| !has_path(&echoed, p)) {
        return Err(CliError::Validation(format!("unknown config key {unknown:?}")));
    }
    config.validate()?;

    let mut sources = BTreeMap::new();
    for (layer, table) in [(Layer::File, &file_table), (Layer::Flag, &flag_table)] {
        let mut paths = Vec::new();
        leaf_paths(table, "", &mut paths);
        for p in paths {
            sources.insert(p, layer);
        }
    }
    Ok(Resolved { config, file: file.map(Path::to_path_buf), overrides: overrides.to_vec(), sources })
}
