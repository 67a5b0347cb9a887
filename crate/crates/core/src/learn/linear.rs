use serde::{Deserialize, Serialize};

use super::matrix::{dot, Matrix};
use super::optim::{lbfgs, LbfgsConfig};
use super::prep::{EncodingConfig, Prep};
use super::risk::{logistic_loss, pu_risk_score_grad, sigmoid, ClassPrior, LossKind};
use super::{check_two_classes, LearnError};
use crate::featurize::FeatureSchema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearLoss {
    /// Mean logistic loss, unlabeled treated as negative.
    Logistic,
    PnSigmoid,
    UpuSigmoid,
    NnpuSigmoid,
}

impl LinearLoss {
    fn risk_kind(self) -> Option<LossKind> {
        match self {
            LinearLoss::Logistic => None,
            LinearLoss::PnSigmoid => Some(LossKind::PnSigmoid),
            LinearLoss::UpuSigmoid => Some(LossKind::UpuSigmoid),
            LinearLoss::NnpuSigmoid => Some(LossKind::NnpuSigmoid),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearConfig {
    pub loss: LinearLoss,
    /// Coefficient of `0.5 * ||w||^2` added to the mean loss.
    pub l2: f64,
    /// Class prior for the sigmoid risks; defaults to the labeled fraction.
    pub prior: Option<f64>,
    pub max_iter: usize,
    pub encoding: EncodingConfig,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self { loss: LinearLoss::Logistic, l2: 1e-3, prior: None, max_iter: 300, encoding: EncodingConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub prep: Prep,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn score(&self, row: &[f64]) -> f64 {
        dot(&self.prep.transform_row(row), &self.weights) + self.bias
    }
}

/// Objective and gradient of a linear scorer `s = x.w + b` with parameters
/// laid out as `[w..., b]`. The penalty skips the bias.
pub fn linear_objective(
    params: &[f64],
    x: &Matrix,
    labels: &[bool],
    loss: LinearLoss,
    prior: ClassPrior,
    l2: f64,
) -> (f64, Vec<f64>) {
    let d = x.cols();
    let (w, b) = (&params[..d], params[d]);
    let scores: Vec<f64> = x.iter_rows().map(|r| dot(r, w) + b).collect();
    let n = x.rows().max(1) as f64;
    let (value, score_grad) = match loss.risk_kind() {
        None => {
            let v =
                scores.iter().zip(labels).map(|(&s, &y)| logistic_loss(s, if y { 1.0 } else { -1.0 })).sum::<f64>() / n;
            let g = scores.iter().zip(labels).map(|(&s, &y)| (sigmoid(s) - y as u8 as f64) / n).collect::<Vec<_>>();
            (v, g)
        }
        Some(kind) => {
            let (sp, su): (Vec<_>, Vec<_>) = split_scores(&scores, labels);
            let (b, gp, gu) = pu_risk_score_grad(&sp, &su, prior, kind);
            (b.total, merge_grads(labels, &gp, &gu))
        }
    };
    let mut grad = vec![0.0; d + 1];
    for (i, r) in x.iter_rows().enumerate() {
        let gi = score_grad[i];
        if gi != 0.0 {
            grad[..d].iter_mut().zip(r).for_each(|(g, v)| *g += gi * v);
            grad[d] += gi;
        }
    }
    let penalty = 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
    grad[..d].iter_mut().zip(w).for_each(|(g, v)| *g += l2 * v);
    (value + penalty, grad)
}

pub(crate) fn split_scores(scores: &[f64], labels: &[bool]) -> (Vec<f64>, Vec<f64>) {
    let sp = scores.iter().zip(labels).filter(|(_, &y)| y).map(|(&s, _)| s).collect();
    let su = scores.iter().zip(labels).filter(|(_, &y)| !y).map(|(&s, _)| s).collect();
    (sp, su)
}

/// Scatter per-set score gradients back into row order.
pub(crate) fn merge_grads(labels: &[bool], gp: &[f64], gu: &[f64]) -> Vec<f64> {
    let (mut ip, mut iu) = (gp.iter(), gu.iter());
    labels.iter().map(|&y| if y { *ip.next().unwrap() } else { *iu.next().unwrap() }).collect()
}

pub(crate) fn resolve_prior(prior: Option<f64>, labels: &[bool]) -> Result<ClassPrior, LearnError> {
    match prior {
        Some(p) => ClassPrior::new(p),
        None => ClassPrior::from_labels(labels),
    }
}

/// Fit weights on an already prepared matrix.
pub(crate) fn fit_prepared(x: &Matrix, labels: &[bool], cfg: &LinearConfig) -> Result<(Vec<f64>, f64), LearnError> {
    if !(cfg.l2 >= 0.0) {
        return Err(LearnError::InvalidConfig(format!("l2 must be non-negative, got {}", cfg.l2)));
    }
    let prior = resolve_prior(cfg.prior, labels)?;
    let d = x.cols();
    let lb = LbfgsConfig { max_iter: cfg.max_iter, ..LbfgsConfig::default() };
    let (params, _) = lbfgs(|p| linear_objective(p, x, labels, cfg.loss, prior, cfg.l2), vec![0.0; d + 1], lb);
    Ok((params[..d].to_vec(), params[d]))
}

pub fn train_linear(
    schema: &FeatureSchema,
    x: &Matrix,
    labels: &[bool],
    cfg: &LinearConfig,
    seed: u64,
) -> Result<LinearModel, LearnError> {
    check_two_classes(labels)?;
    let (prep, xt) = Prep::fit(x, labels, &schema.categorical_columns(), cfg.encoding, true, seed)?;
    let (weights, bias) = fit_prepared(&xt, labels, cfg)?;
    Ok(LinearModel { prep, weights, bias })
}
