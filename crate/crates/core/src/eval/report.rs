use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::metrics::{f_beta_at_k, precision_at_k, roc_auc};
use super::noise::{clamp_unit, corrected_auc, NoiseModel};
use super::EvalError;
use crate::featurize::{FeatureGroup, SnapshotDataset, SnapshotExample, SplitCounts};
use crate::learn::{labels_of, predict, train, Model, ModelKind, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    pub k_values: Vec<usize>,
    pub f_beta: f64,
    pub noise: Option<NoiseModel>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { k_values: vec![100, 200], f_beta: 0.1, noise: None }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.k_values.contains(&0) {
            return Err(EvalError::InvalidInput("k values must be at least 1".into()));
        }
        if !(self.f_beta > 0.0) {
            return Err(EvalError::InvalidInput(format!("f_beta must be positive, got {}", self.f_beta)));
        }
        if let Some(n) = self.noise {
            NoiseModel::new(n.alpha, n.beta)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtK {
    pub k: usize,
    pub precision: f64,
    pub f_beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub model_kind: Option<ModelKind>,
    pub schema_hash: String,
    pub seed: u64,
    pub counts: SplitCounts,
    pub f_beta: f64,
    pub at_k: Vec<AtK>,
    pub auc_raw: f64,
    pub auc_corrected: Option<f64>,
    /// Set when the corrected AUC fell outside `[0, 1]` and was clamped.
    pub auc_corrected_clamped: bool,
    pub noise: Option<NoiseModel>,
}

/// Metrics of one score vector against (noisy) labels.
pub fn evaluate_scores(scores: &[f64], labels: &[bool], cfg: &MetricConfig) -> Result<EvaluationReport, EvalError> {
    cfg.validate()?;
    let at_k = cfg
        .k_values
        .iter()
        .map(|&k| {
            Ok(AtK {
                k,
                precision: precision_at_k(scores, labels, k)?,
                f_beta: f_beta_at_k(scores, labels, k, cfg.f_beta)?,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let auc_raw = roc_auc(scores, labels)?;
    let (auc_corrected, clamped) = match cfg.noise {
        Some(n) => {
            let (v, c) = clamp_unit(corrected_auc(auc_raw, n)?);
            if c {
                log::warn!("corrected AUC outside [0, 1]; clamped to {v}");
            }
            (Some(v), c)
        }
        None => (None, false),
    };
    let n_p = labels.iter().filter(|&&y| y).count();
    Ok(EvaluationReport {
        model_kind: None,
        schema_hash: String::new(),
        seed: 0,
        counts: SplitCounts { n_p, n_u: labels.len() - n_p },
        f_beta: cfg.f_beta,
        at_k,
        auc_raw,
        auc_corrected,
        auc_corrected_clamped: clamped,
        noise: cfg.noise,
    })
}

/// Score the test split with `model` and report metrics.
pub fn evaluate_model(
    model: &Model,
    dataset: &SnapshotDataset,
    cfg: &MetricConfig,
) -> Result<EvaluationReport, EvalError> {
    let scores = predict(model, &dataset.schema, &dataset.test)?;
    let mut report = evaluate_scores(&scores, &labels_of(&dataset.test), cfg)?;
    report.model_kind = Some(model.kind);
    report.schema_hash = model.schema_hash.clone();
    report.seed = model.seed;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub name: String,
    pub dropped: Option<FeatureGroup>,
    pub n_features: usize,
    pub report: EvaluationReport,
}

/// Leave-one-group-out table: all features, then without the financial,
/// social and web groups in turn. The general group is always kept. Every
/// row uses the same trainer config and seed.
pub fn ablate_groups(
    dataset: &SnapshotDataset,
    config: &TrainConfig,
    seed: u64,
    metrics: &MetricConfig,
) -> Result<Vec<AblationRow>, EvalError> {
    let variants = [
        ("all features", None),
        ("no financial", Some(FeatureGroup::Financial)),
        ("no social", Some(FeatureGroup::Social)),
        ("no web", Some(FeatureGroup::Web)),
    ];
    variants
        .into_iter()
        .map(|(name, dropped)| {
            let ds = match dropped {
                Some(g) => dataset.without_groups(&[g]),
                None => dataset.clone(),
            };
            let model = train(config, &ds.schema, &ds.train, seed)?;
            let report = evaluate_model(&model, &ds, metrics)?;
            log::info!("ablation {name}: AUC {:.4}", report.auc_raw);
            Ok(AblationRow { name: name.into(), dropped, n_features: ds.schema.len(), report })
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn write_ablation_csv<W: Write>(rows: &[AblationRow], writer: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(writer);
    let ks: Vec<usize> = rows.first().map(|r| r.report.at_k.iter().map(|a| a.k).collect()).unwrap_or_default();
    let mut header = vec!["row".to_string(), "dropped".into(), "n_features".into(), "schema_hash".into()];
    for k in &ks {
        header.push(format!("p_at_{k}"));
        header.push(format!("f_beta_at_{k}"));
    }
    header.extend(["auc_raw".into(), "auc_corrected".into()]);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.name.clone(),
            r.dropped.map(|g| g.name().to_string()).unwrap_or_default(),
            r.n_features.to_string(),
            r.report.schema_hash.clone(),
        ];
        for a in &r.report.at_k {
            rec.push(format!("{:.6}", a.precision));
            rec.push(format!("{:.6}", a.f_beta));
        }
        rec.push(format!("{:.6}", r.report.auc_raw));
        rec.push(fmt_opt(r.report.auc_corrected));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountryCount {
    pub split: String,
    pub country: String,
    pub examples: usize,
    pub positives: usize,
}

/// Examples and positives per inferred country and split.
pub fn country_counts(dataset: &SnapshotDataset) -> Vec<CountryCount> {
    let col = dataset.schema.index_of("country");
    let name = |ex: &SnapshotExample| -> String {
        col.map(|c| ex.features[c])
            .filter(|v| !v.is_nan())
            .and_then(|v| dataset.schema.countries.get(v as usize).cloned())
            .unwrap_or_else(|| "unknown".into())
    };
    let mut out = Vec::new();
    for (split, examples) in [("train", &dataset.train), ("test", &dataset.test)] {
        let mut tally: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        for ex in examples {
            let e = tally.entry(name(ex)).or_default();
            e.0 += 1;
            e.1 += ex.label.is_positive() as usize;
        }
        out.extend(tally.into_iter().map(|(country, (examples, positives))| CountryCount {
            split: split.into(),
            country,
            examples,
            positives,
        }));
    }
    out
}

pub fn write_country_csv<W: Write>(rows: &[CountryCount], writer: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
