use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use super::EvalError;
use crate::ingest::{AuditRecord, AuditSample};

/// Label-noise rates: `alpha` is the share of unlabeled examples that are
/// truly positive, `beta` the share of labeled positives that are.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub alpha: f64,
    pub beta: f64,
}

impl NoiseModel {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, EvalError> {
        if !(0.0..1.0).contains(&alpha) || !(beta > 0.0 && beta <= 1.0) || beta <= alpha {
            return Err(EvalError::NoiseOrder { alpha, beta });
        }
        Ok(Self { alpha, beta })
    }
}

/// Clean-label AUC recovered from the AUC measured against noisy labels:
/// `(auc_pu - (1 - (beta - alpha)) / 2) / (beta - alpha)`. Not clamped.
pub fn corrected_auc(auc_pu: f64, noise: NoiseModel) -> Result<f64, EvalError> {
    let gap = noise.beta - noise.alpha;
    if !(gap > 0.0) {
        return Err(EvalError::NoiseOrder { alpha: noise.alpha, beta: noise.beta });
    }
    Ok((auc_pu - (1.0 - gap) / 2.0) / gap)
}

/// Clamp to `[0, 1]`, reporting whether clamping happened.
pub fn clamp_unit(v: f64) -> (f64, bool) {
    let c = v.clamp(0.0, 1.0);
    (c, c != v)
}

/// Exact (Clopper-Pearson) two-sided interval for a binomial proportion.
pub fn clopper_pearson(successes: u64, trials: u64, level: f64) -> (f64, f64) {
    let a = (1.0 - level) / 2.0;
    let (k, n) = (successes as f64, trials as f64);
    let lo = if successes == 0 { 0.0 } else { Beta::new(k, n - k + 1.0).expect("valid shape").inverse_cdf(a) };
    let hi =
        if successes == trials { 1.0 } else { Beta::new(k + 1.0, n - k).expect("valid shape").inverse_cdf(1.0 - a) };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseEstimate {
    pub noise: NoiseModel,
    /// Audited labeled positives and how many were false.
    pub positives_audited: u64,
    pub false_positives: u64,
    /// Audited unlabeled startups and how many had in fact raised money.
    pub unlabeled_audited: u64,
    pub hidden_positives: u64,
    pub alpha_ci95: (f64, f64),
    pub beta_ci95: (f64, f64),
}

/// Noise rates from manual audits of labeled positives and unlabeled
/// startups, with exact 95% intervals.
pub fn estimate_noise(audits: &[AuditRecord]) -> Result<NoiseEstimate, EvalError> {
    let count = |s: AuditSample, funded: bool| {
        audits.iter().filter(|a| a.sample == s && a.truly_funded == funded).count() as u64
    };
    let (tp, fp) = (count(AuditSample::LabeledPositive, true), count(AuditSample::LabeledPositive, false));
    let (hidden, clean) = (count(AuditSample::Unlabeled, true), count(AuditSample::Unlabeled, false));
    let n_pos = tp + fp;
    let n_unl = hidden + clean;
    if n_pos == 0 || n_unl == 0 {
        return Err(EvalError::InvalidInput(
            "noise estimation needs audits of both labeled positives and unlabeled".into(),
        ));
    }
    let beta = 1.0 - fp as f64 / n_pos as f64;
    let alpha = hidden as f64 / n_unl as f64;
    Ok(NoiseEstimate {
        noise: NoiseModel::new(alpha, beta)?,
        positives_audited: n_pos,
        false_positives: fp,
        unlabeled_audited: n_unl,
        hidden_positives: hidden,
        alpha_ci95: clopper_pearson(hidden, n_unl, 0.95),
        beta_ci95: clopper_pearson(tp, n_pos, 0.95),
    })
}
