//! AUC risk estimated from positive and unlabeled data, and a Gaussian
//! kernel scorer trained on it.
//!
//! With the composite `f(x, x') = g(x) - g(x')` and surrogate `l(m)`:
//!
//! ```text
//! R = 1/(pi_n nP nU)     sum_{i,j}      l(g(p_i) - g(u_j))
//!   - 1/(pi_n nP (nP-1)) sum_{i != i'}  l(g(p_i) - g(p_i'))
//!   + pi_p / (pi_n (nP - 1))
//! ```

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linear::{merge_grads, resolve_prior, split_scores};
use super::matrix::{dot, Matrix};
use super::optim::{lbfgs, LbfgsConfig};
use super::prep::{EncodingConfig, Prep};
use super::risk::ClassPrior;
use super::{check_two_classes, rng_for, LearnError};
use crate::featurize::FeatureSchema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surrogate {
    /// `(1 - m)^2` for `m < 1`, else 0.
    SquaredHinge,
    /// `log(1 + exp(-m))`.
    Logistic,
}

impl Surrogate {
    pub fn value(self, m: f64) -> f64 {
        match self {
            Surrogate::SquaredHinge => {
                let t = (1.0 - m).max(0.0);
                t * t
            }
            Surrogate::Logistic => super::risk::logistic_loss(m, 1.0),
        }
    }

    pub fn deriv(self, m: f64) -> f64 {
        match self {
            Surrogate::SquaredHinge => -2.0 * (1.0 - m).max(0.0),
            Surrogate::Logistic => -super::risk::sigmoid(-m),
        }
    }
}

fn check_sizes(np: usize, nu: usize) -> Result<(), LearnError> {
    if np < 2 {
        return Err(LearnError::InvalidConfig(format!("PU-AUC risk needs at least 2 positives, got {np}")));
    }
    if nu == 0 {
        return Err(LearnError::EmptySet("unlabeled scores"));
    }
    Ok(())
}

pub fn pu_auc_risk(
    scores_p: &[f64],
    scores_u: &[f64],
    prior: ClassPrior,
    surrogate: Surrogate,
) -> Result<f64, LearnError> {
    check_sizes(scores_p.len(), scores_u.len())?;
    let (np, nu) = (scores_p.len() as f64, scores_u.len() as f64);
    let pi_n = prior.pi_n();
    let cross: f64 = scores_p.iter().map(|&s| scores_u.iter().map(|&u| surrogate.value(s - u)).sum::<f64>()).sum();
    let within: f64 = scores_p
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            scores_p.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &t)| surrogate.value(s - t)).sum::<f64>()
        })
        .sum();
    Ok(cross / (pi_n * np * nu) - within / (pi_n * np * (np - 1.0)) + prior.pi_p() / (pi_n * (np - 1.0)))
}

/// Risk plus its derivative with respect to each positive and unlabeled score.
pub fn pu_auc_risk_grad(
    scores_p: &[f64],
    scores_u: &[f64],
    prior: ClassPrior,
    surrogate: Surrogate,
) -> Result<(f64, Vec<f64>, Vec<f64>), LearnError> {
    let risk = pu_auc_risk(scores_p, scores_u, prior, surrogate)?;
    let (np, nu) = (scores_p.len() as f64, scores_u.len() as f64);
    let c1 = 1.0 / (prior.pi_n() * np * nu);
    let c2 = 1.0 / (prior.pi_n() * np * (np - 1.0));
    let mut gp = vec![0.0; scores_p.len()];
    let mut gu = vec![0.0; scores_u.len()];
    for (i, &s) in scores_p.iter().enumerate() {
        for (j, &u) in scores_u.iter().enumerate() {
            let d = surrogate.deriv(s - u) * c1;
            gp[i] += d;
            gu[j] -= d;
        }
        for (k, &t) in scores_p.iter().enumerate() {
            if k != i {
                let d = surrogate.deriv(s - t) * c2;
                gp[i] -= d;
                gp[k] += d;
            }
        }
    }
    Ok((risk, gp, gu))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelConfig {
    pub basis_size: usize,
    /// Gaussian width; the median pairwise distance between basis points
    /// when unset.
    pub width: Option<f64>,
    /// Coefficient of `||w||^2`.
    pub ridge: f64,
    pub surrogate: Surrogate,
    pub prior: Option<f64>,
    pub max_iter: usize,
    pub encoding: EncodingConfig,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            basis_size: 200,
            width: None,
            ridge: 1e-3,
            surrogate: Surrogate::SquaredHinge,
            prior: None,
            max_iter: 200,
            encoding: EncodingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub prep: Prep,
    pub centers: Vec<Vec<f64>>,
    pub width: f64,
    pub weights: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn features(row: &[f64], centers: &[Vec<f64>], width: f64) -> Vec<f64> {
    let k = -0.5 / (width * width);
    centers.iter().map(|c| (k * sq_dist(row, c)).exp()).collect()
}

impl KernelModel {
    pub fn score(&self, row: &[f64]) -> f64 {
        dot(&features(&self.prep.transform_row(row), &self.centers, self.width), &self.weights)
    }
}

fn median_distance(centers: &[Vec<f64>]) -> f64 {
    let mut d: Vec<f64> = (0..centers.len())
        .flat_map(|i| (i + 1..centers.len()).map(move |j| (i, j)))
        .map(|(i, j)| sq_dist(&centers[i], &centers[j]).sqrt())
        .collect();
    if d.is_empty() {
        return 0.0;
    }
    d.sort_by(f64::total_cmp);
    d[d.len() / 2]
}

pub fn train_pu_auc(
    schema: &FeatureSchema,
    x: &Matrix,
    labels: &[bool],
    cfg: &KernelConfig,
    seed: u64,
) -> Result<KernelModel, LearnError> {
    check_two_classes(labels)?;
    if let Some(w) = cfg.width {
        if !(w > 0.0) {
            return Err(LearnError::KernelWidth(w));
        }
    }
    if cfg.basis_size == 0 || !(cfg.ridge >= 0.0) {
        return Err(LearnError::InvalidConfig("kernel basis size must be positive and ridge non-negative".into()));
    }
    let prior = resolve_prior(cfg.prior, labels)?;
    check_sizes(labels.iter().filter(|&&y| y).count(), 1)?;
    let (prep, xt) = Prep::fit(x, labels, &schema.categorical_columns(), cfg.encoding, true, seed)?;
    let n = xt.rows();
    let mut idx = if cfg.basis_size >= n {
        (0..n).collect()
    } else {
        sample(&mut rng_for(seed, 3), n, cfg.basis_size).into_vec()
    };
    idx.sort_unstable();
    let centers: Vec<Vec<f64>> = idx.iter().map(|&i| xt.row(i).to_vec()).collect();
    let width = match cfg.width {
        Some(w) => w,
        None => median_distance(&centers),
    };
    if !(width > 0.0) {
        return Err(LearnError::KernelWidth(width));
    }
    let phi_rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|i| features(xt.row(i), &centers, width)).collect();
    let phi = Matrix::from_rows(&phi_rows);
    let b = centers.len();

    let objective = |w: &[f64]| {
        let scores: Vec<f64> = phi.iter_rows().map(|r| dot(r, w)).collect();
        let (sp, su) = split_scores(&scores, labels);
        let (risk, gp, gu) = pu_auc_risk_grad(&sp, &su, prior, cfg.surrogate).expect("sizes checked");
        let gs = merge_grads(labels, &gp, &gu);
        let mut grad: Vec<f64> = w.iter().map(|v| 2.0 * cfg.ridge * v).collect();
        for (r, g) in phi.iter_rows().zip(&gs) {
            grad.iter_mut().zip(r).for_each(|(a, p)| *a += g * p);
        }
        (risk + cfg.ridge * dot(w, w), grad)
    };
    let lb = LbfgsConfig { max_iter: cfg.max_iter, ..LbfgsConfig::default() };
    let (weights, value) = lbfgs(objective, vec![0.0; b], lb);
    log::debug!("kernel PU-AUC objective {value:.6} with {b} centers, width {width:.4}");
    Ok(KernelModel { prep, centers, width, weights })
}
