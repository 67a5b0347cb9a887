//! Sigmoid-surrogate risks for PN and positive-unlabeled training.
//!
//! With `l(z, y) = 1 / (1 + exp(y z))`, the empirical pieces are
//!
//! * `R_p+ = mean_{x in P} l(g(x), +1)`
//! * `R_p- = mean_{x in P} l(g(x), -1)`
//! * `R_u- = mean_{x in U} l(g(x), -1)`
//!
//! The unbiased PU risk is `pi_p R_p+ + R_u- - pi_p R_p-`; the non-negative
//! variant replaces the last two terms by `max(R_u- - pi_p R_p-, 0)`.

use serde::{Deserialize, Serialize};

use super::LearnError;

/// Class prior `pi_p = p(Y = +1)`, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassPrior(f64);

impl ClassPrior {
    pub fn new(pi_p: f64) -> Result<Self, LearnError> {
        if pi_p > 0.0 && pi_p < 1.0 {
            Ok(Self(pi_p))
        } else {
            Err(LearnError::InvalidConfig(format!("class prior must lie in (0, 1), got {pi_p}")))
        }
    }

    /// Labeled-positive fraction of a label vector.
    pub fn from_labels(labels: &[bool]) -> Result<Self, LearnError> {
        let n = labels.len().max(1) as f64;
        Self::new(labels.iter().filter(|&&y| y).count() as f64 / n)
    }

    pub fn pi_p(self) -> f64 {
        self.0
    }

    pub fn pi_n(self) -> f64 {
        1.0 - self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Unlabeled treated as negative, classes weighted by the prior.
    PnSigmoid,
    UpuSigmoid,
    NnpuSigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskBreakdown {
    pub r_p_plus: f64,
    pub r_p_minus: f64,
    pub r_u_minus: f64,
    pub total: f64,
    /// True when the non-negative correction replaced a negative bracket.
    pub clipped: bool,
}

impl RiskBreakdown {
    /// `R_u- - pi_p R_p-`, the estimate of `pi_n R_n-`.
    pub fn bracket(&self, prior: ClassPrior) -> f64 {
        self.r_u_minus - prior.pi_p() * self.r_p_minus
    }
}

/// `1 / (1 + exp(y z))`.
pub fn sigmoid_loss(z: f64, y: f64) -> f64 {
    let t = y * z;
    if t >= 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

/// `d/dz l(z, y) = -y l (1 - l)`.
pub fn sigmoid_loss_grad(z: f64, y: f64) -> f64 {
    let l = sigmoid_loss(z, y);
    -y * l * (1.0 - l)
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        values.sum::<f64>() / n as f64
    }
}

/// Risk of a scorer from its scores on labeled positives and unlabeled data.
///
/// For [`LossKind::PnSigmoid`] the total is `pi_p R_p+ + pi_n R_u-`, i.e.
/// unlabeled examples are scored as negatives.
pub fn pu_risk(
    scores_p: &[f64],
    scores_u: &[f64],
    prior: ClassPrior,
    kind: LossKind,
) -> Result<RiskBreakdown, LearnError> {
    if scores_u.is_empty() {
        return Err(LearnError::EmptySet("unlabeled scores"));
    }
    if scores_p.is_empty() && kind != LossKind::PnSigmoid {
        return Err(LearnError::EmptySet("positive scores"));
    }
    Ok(breakdown(scores_p, scores_u, prior, kind))
}

fn breakdown(scores_p: &[f64], scores_u: &[f64], prior: ClassPrior, kind: LossKind) -> RiskBreakdown {
    let r_p_plus = mean(scores_p.iter().map(|&s| sigmoid_loss(s, 1.0)), scores_p.len());
    let r_p_minus = mean(scores_p.iter().map(|&s| sigmoid_loss(s, -1.0)), scores_p.len());
    let r_u_minus = mean(scores_u.iter().map(|&s| sigmoid_loss(s, -1.0)), scores_u.len());
    let pi = prior.pi_p();
    let bracket = r_u_minus - pi * r_p_minus;
    let (total, clipped) = match kind {
        LossKind::PnSigmoid => (pi * r_p_plus + prior.pi_n() * r_u_minus, false),
        LossKind::UpuSigmoid => (pi * r_p_plus + bracket, false),
        LossKind::NnpuSigmoid if bracket < 0.0 => (pi * r_p_plus, true),
        LossKind::NnpuSigmoid => (pi * r_p_plus + bracket, false),
    };
    RiskBreakdown { r_p_plus, r_p_minus, r_u_minus, total, clipped }
}

/// Risk and its derivative with respect to every score.
pub fn pu_risk_score_grad(
    scores_p: &[f64],
    scores_u: &[f64],
    prior: ClassPrior,
    kind: LossKind,
) -> (RiskBreakdown, Vec<f64>, Vec<f64>) {
    let b = breakdown(scores_p, scores_u, prior, kind);
    let pi = prior.pi_p();
    let np = scores_p.len().max(1) as f64;
    let nu = scores_u.len().max(1) as f64;
    let (w_pp, w_pm, w_um) = match kind {
        LossKind::PnSigmoid => (pi, 0.0, prior.pi_n()),
        LossKind::UpuSigmoid => (pi, -pi, 1.0),
        LossKind::NnpuSigmoid if b.clipped => (pi, 0.0, 0.0),
        LossKind::NnpuSigmoid => (pi, -pi, 1.0),
    };
    let gp =
        scores_p.iter().map(|&s| (w_pp * sigmoid_loss_grad(s, 1.0) + w_pm * sigmoid_loss_grad(s, -1.0)) / np).collect();
    let gu = scores_u.iter().map(|&s| w_um * sigmoid_loss_grad(s, -1.0) / nu).collect();
    (b, gp, gu)
}

/// Descent direction used by non-negative PU training: when the bracket is
/// negative the step follows `-(R_u- - pi_p R_p-)`, pushing the bracket back
/// up; otherwise it is the plain risk gradient.
pub fn nnpu_step_score_grad(
    scores_p: &[f64],
    scores_u: &[f64],
    prior: ClassPrior,
) -> (RiskBreakdown, Vec<f64>, Vec<f64>) {
    let (b, gp, gu) = pu_risk_score_grad(scores_p, scores_u, prior, LossKind::NnpuSigmoid);
    if !b.clipped {
        return (b, gp, gu);
    }
    let pi = prior.pi_p();
    let np = scores_p.len().max(1) as f64;
    let nu = scores_u.len().max(1) as f64;
    let gp = scores_p.iter().map(|&s| pi * sigmoid_loss_grad(s, -1.0) / np).collect();
    let gu = scores_u.iter().map(|&s| -sigmoid_loss_grad(s, -1.0) / nu).collect();
    (b, gp, gu)
}

/// Fully supervised sigmoid risk `pi_p R_p+ + pi_n R_n-` with true negatives.
pub fn pn_risk(scores_p: &[f64], scores_n: &[f64], prior: ClassPrior) -> f64 {
    let r_p = mean(scores_p.iter().map(|&s| sigmoid_loss(s, 1.0)), scores_p.len());
    let r_n = mean(scores_n.iter().map(|&s| sigmoid_loss(s, -1.0)), scores_n.len());
    prior.pi_p() * r_p + prior.pi_n() * r_n
}

/// `log(1 + exp(-y z))`, numerically stable.
pub fn logistic_loss(z: f64, y: f64) -> f64 {
    let t = -y * z;
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
