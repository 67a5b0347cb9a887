use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linear::{merge_grads, resolve_prior, split_scores};
use super::matrix::Matrix;
use super::optim::Adam;
use super::prep::{EncodingConfig, Prep};
use super::risk::{nnpu_step_score_grad, pu_risk_score_grad, ClassPrior, LossKind, RiskBreakdown};
use super::{check_two_classes, rng_for, LearnError};
use crate::featurize::FeatureSchema;

/// Rows per parallel gradient chunk. Chunk sums are reduced in chunk order,
/// so results do not depend on the worker count.
const CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub loss: LossKind,
    pub prior: Option<f64>,
    /// Weight decay added to the gradient.
    pub l2: f64,
    pub encoding: EncodingConfig,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: vec![100, 100],
            learning_rate: 1e-4,
            batch_size: 1000,
            epochs: 5,
            loss: LossKind::PnSigmoid,
            prior: None,
            l2: 0.0,
            encoding: EncodingConfig::default(),
        }
    }
}

/// Fully connected ReLU network with a single linear output. Parameters are
/// stored flat, layer by layer, as the weight matrix (row per output unit)
/// followed by the bias vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNet {
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
}

impl MlpNet {
    pub fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    /// He-uniform weights, zero biases.
    pub fn init(sizes: Vec<usize>, seed: u64) -> Self {
        let mut rng = rng_for(seed, 1);
        let mut params = Vec::with_capacity(Self::param_count(&sizes));
        for w in sizes.windows(2) {
            let bound = (6.0 / w[0].max(1) as f64).sqrt();
            params.extend((0..w[0] * w[1]).map(|_| rng.random_range(-bound..bound)));
            params.extend(std::iter::repeat_n(0.0, w[1]));
        }
        Self { sizes, params }
    }

    /// Activations of every layer, input first, for one row.
    fn forward_all(&self, params: &[f64], row: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![row.to_vec()];
        let mut off = 0;
        let last = self.sizes.len() - 2;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let (wm, bias) =
                (&params[off..off + n_in * n_out], &params[off + n_in * n_out..off + n_in * n_out + n_out]);
            let input = acts.last().unwrap();
            let out: Vec<f64> = (0..n_out)
                .map(|o| {
                    let z = wm[o * n_in..(o + 1) * n_in].iter().zip(input).map(|(a, b)| a * b).sum::<f64>() + bias[o];
                    if l == last {
                        z
                    } else {
                        z.max(0.0)
                    }
                })
                .collect();
            off += n_in * n_out + n_out;
            acts.push(out);
        }
        acts
    }

    pub fn score_with(&self, params: &[f64], row: &[f64]) -> f64 {
        self.forward_all(params, row).last().unwrap()[0]
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        self.score_with(&self.params, row)
    }

    /// Add `ds * d score / d params` for one row into `grad`.
    fn backward(&self, params: &[f64], row: &[f64], ds: f64, grad: &mut [f64]) {
        let acts = self.forward_all(params, row);
        let offsets: Vec<usize> = self
            .sizes
            .windows(2)
            .scan(0, |off, w| {
                let o = *off;
                *off += w[0] * w[1] + w[1];
                Some(o)
            })
            .collect();
        let mut delta = vec![ds];
        for l in (0..self.sizes.len() - 1).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let input = &acts[l];
            for o in 0..n_out {
                if delta[o] == 0.0 {
                    continue;
                }
                let gw = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                gw.iter_mut().zip(input).for_each(|(g, a)| *g += delta[o] * a);
                grad[off + n_in * n_out + o] += delta[o];
            }
            if l > 0 {
                let wm = &params[off..off + n_in * n_out];
                delta = (0..n_in)
                    .map(|i| if input[i] <= 0.0 { 0.0 } else { (0..n_out).map(|o| delta[o] * wm[o * n_in + i]).sum() })
                    .collect();
            }
        }
    }

    fn scores(&self, params: &[f64], x: &Matrix, rows: &[usize]) -> Vec<f64> {
        rows.par_iter().map(|&i| self.score_with(params, x.row(i))).collect()
    }

    fn param_grad(&self, params: &[f64], x: &Matrix, rows: &[usize], score_grad: &[f64]) -> Vec<f64> {
        let idx: Vec<usize> = (0..rows.len()).collect();
        let partial: Vec<Vec<f64>> = idx
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut g = vec![0.0; params.len()];
                for &k in chunk {
                    if score_grad[k] != 0.0 {
                        self.backward(params, x.row(rows[k]), score_grad[k], &mut g);
                    }
                }
                g
            })
            .collect();
        let mut total = vec![0.0; params.len()];
        for g in partial {
            total.iter_mut().zip(g).for_each(|(t, v)| *t += v);
        }
        total
    }

    /// Risk of the network over `x` and its gradient in parameter space.
    pub fn risk_and_grad(
        &self,
        params: &[f64],
        x: &Matrix,
        labels: &[bool],
        loss: LossKind,
        prior: ClassPrior,
    ) -> (RiskBreakdown, Vec<f64>) {
        let rows: Vec<usize> = (0..x.rows()).collect();
        let scores = self.scores(params, x, &rows);
        let (sp, su) = split_scores(&scores, labels);
        let (b, gp, gu) = pu_risk_score_grad(&sp, &su, prior, loss);
        let g = self.param_grad(params, x, &rows, &merge_grads(labels, &gp, &gu));
        (b, g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub prep: Prep,
    pub net: MlpNet,
    /// Full training-set risk after each epoch.
    pub history: Vec<RiskBreakdown>,
}

impl MlpModel {
    pub fn score(&self, row: &[f64]) -> f64 {
        self.net.score(&self.prep.transform_row(row))
    }
}

/// Split rows into batches with positives and unlabeled spread evenly.
fn stratified_batches(labels: &[bool], batch_size: usize, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let n = labels.len();
    let nb = n.div_ceil(batch_size.max(1)).max(1);
    let mut pos: Vec<usize> = (0..n).filter(|&i| labels[i]).collect();
    let mut unl: Vec<usize> = (0..n).filter(|&i| !labels[i]).collect();
    pos.shuffle(rng);
    unl.shuffle(rng);
    let mut batches = vec![Vec::new(); nb];
    for (k, i) in pos.into_iter().enumerate() {
        batches[k % nb].push(i);
    }
    for (k, i) in unl.into_iter().enumerate() {
        batches[(nb - 1) - k % nb].push(i);
    }
    batches
}

pub fn train_mlp(
    schema: &FeatureSchema,
    x: &Matrix,
    labels: &[bool],
    cfg: &MlpConfig,
    seed: u64,
) -> Result<MlpModel, LearnError> {
    check_two_classes(labels)?;
    if cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) || cfg.hidden.contains(&0) {
        return Err(LearnError::InvalidConfig("mlp needs positive batch size, learning rate and layer widths".into()));
    }
    let prior = resolve_prior(cfg.prior, labels)?;
    let (prep, xt) = Prep::fit(x, labels, &schema.categorical_columns(), cfg.encoding, true, seed)?;
    let mut sizes = vec![xt.cols()];
    sizes.extend(&cfg.hidden);
    sizes.push(1);
    let mut net = MlpNet::init(sizes, seed);
    let mut opt = Adam::new(net.params.len(), cfg.learning_rate);
    let mut rng = rng_for(seed, 2);
    let mut history = Vec::with_capacity(cfg.epochs);
    let all: Vec<usize> = (0..xt.rows()).collect();

    for epoch in 0..cfg.epochs {
        for (bi, batch) in stratified_batches(labels, cfg.batch_size, &mut rng).iter().enumerate() {
            let scores = net.scores(&net.params, &xt, batch);
            let bl: Vec<bool> = batch.iter().map(|&i| labels[i]).collect();
            let (sp, su) = split_scores(&scores, &bl);
            let (b, gp, gu) = match cfg.loss {
                LossKind::NnpuSigmoid => nnpu_step_score_grad(&sp, &su, prior),
                kind => pu_risk_score_grad(&sp, &su, prior, kind),
            };
            let mut grad = net.param_grad(&net.params, &xt, batch, &merge_grads(&bl, &gp, &gu));
            if cfg.l2 > 0.0 {
                grad.iter_mut().zip(&net.params).for_each(|(g, p)| *g += cfg.l2 * p);
            }
            if !b.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(LearnError::NonFinite { epoch, batch: bi, loss: b.total });
            }
            opt.step(&mut net.params, &grad);
        }
        let scores = net.scores(&net.params, &xt, &all);
        let (sp, su) = split_scores(&scores, labels);
        let (b, _, _) = pu_risk_score_grad(&sp, &su, prior, cfg.loss);
        if !b.total.is_finite() {
            return Err(LearnError::NonFinite { epoch, batch: usize::MAX, loss: b.total });
        }
        log::debug!("mlp epoch {epoch}: risk {:.6}", b.total);
        history.push(b);
    }
    Ok(MlpModel { prep, net, history })
}
