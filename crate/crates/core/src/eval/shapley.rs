//! Monte-Carlo permutation estimate of Shapley values for one scored example.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::learn::Scorer;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapleyConfig {
    pub permutations: usize,
    pub background_rows: usize,
    pub seed: u64,
}

impl Default for ShapleyConfig {
    fn default() -> Self {
        Self { permutations: 128, background_rows: 32, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub values: Vec<f64>,
    /// Mean score over the background rows.
    pub base: f64,
    /// Score of the explained example.
    pub score: f64,
    /// Standard error of each value across permutations.
    pub std_errors: Vec<f64>,
    /// Standard error of the attribution sum across permutations.
    pub sum_std_error: f64,
}

impl Attribution {
    /// `sum(values) + base - score`; zero up to rounding for this estimator.
    pub fn efficiency_gap(&self) -> f64 {
        self.values.iter().sum::<f64>() + self.base - self.score
    }
}

fn same(a: f64, b: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan())
}

/// Permutation estimator: for each sampled feature order and each
/// background row, features switch one at a time from the background value
/// to the example value and the score change is credited to the switched
/// feature. Every (permutation, background) walk telescopes to
/// `g(example) - g(background)`, so attributions plus base reproduce the
/// example's score.
pub fn shapley_attribution<S: Scorer + ?Sized>(
    model: &S,
    example: &[f64],
    background: &[Vec<f64>],
    permutations: usize,
    seed: u64,
) -> Result<Attribution, EvalError> {
    if background.is_empty() {
        return Err(EvalError::EmptyBackground);
    }
    if permutations == 0 {
        return Err(EvalError::InvalidInput("at least one permutation required".into()));
    }
    if let Some(b) = background.iter().find(|b| b.len() != example.len()) {
        return Err(EvalError::InvalidInput(format!(
            "background row has {} values, example {}",
            b.len(),
            example.len()
        )));
    }
    let d = example.len();
    let score = model.score(example);
    let bg_scores: Vec<f64> = background.iter().map(|b| model.score(b)).collect();
    let base = bg_scores.iter().sum::<f64>() / background.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..d).collect();
    let mut per_perm = Vec::with_capacity(permutations);
    for _ in 0..permutations {
        order.shuffle(&mut rng);
        let mut phi = vec![0.0; d];
        for (b, &b_score) in background.iter().zip(&bg_scores) {
            let mut z = b.clone();
            let mut prev = b_score;
            let last = order.iter().rposition(|&j| !same(example[j], b[j]));
            for (pos, &j) in order.iter().enumerate() {
                if same(example[j], b[j]) {
                    continue;
                }
                z[j] = example[j];
                // the final switch reaches the example itself
                let cur = if Some(pos) == last { score } else { model.score(&z) };
                phi[j] += cur - prev;
                prev = cur;
            }
        }
        phi.iter_mut().for_each(|v| *v /= background.len() as f64);
        per_perm.push(phi);
    }
    let p = permutations as f64;
    let values: Vec<f64> = (0..d).map(|j| per_perm.iter().map(|r| r[j]).sum::<f64>() / p).collect();
    let se = |xs: &mut dyn Iterator<Item = f64>, mean: f64| -> f64 {
        if permutations < 2 {
            return 0.0;
        }
        let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (p - 1.0);
        (var / p).sqrt()
    };
    let std_errors = (0..d).map(|j| se(&mut per_perm.iter().map(|r| r[j]), values[j])).collect();
    let sums: Vec<f64> = per_perm.iter().map(|r| r.iter().sum()).collect();
    let total = values.iter().sum::<f64>();
    let sum_std_error = se(&mut sums.iter().copied(), total);
    Ok(Attribution { values, base, score, std_errors, sum_std_error })
}

/// Attributions for many examples; example `i` uses seed stream `(seed, i)`
/// so results do not depend on scheduling.
pub fn explain_examples<S: Scorer + ?Sized>(
    model: &S,
    examples: &[Vec<f64>],
    background: &[Vec<f64>],
    cfg: &ShapleyConfig,
) -> Result<Vec<Attribution>, EvalError> {
    let bg = &background[..background.len().min(cfg.background_rows.max(1))];
    examples
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let seed = cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64);
            shapley_attribution(model, x, bg, cfg.permutations, seed)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeeswarmRow {
    pub feature: String,
    pub example: usize,
    pub attribution: f64,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionSummary {
    /// Features with non-zero total importance, most important first.
    pub ranking: Vec<(String, f64)>,
    /// True when every attribution is zero.
    pub all_zero: bool,
    pub rows: Vec<BeeswarmRow>,
}

/// Rank features by the sum of absolute attributions and lay out one row
/// per (example, feature) for plotting.
pub fn summarize_attributions(
    attributions: &[Attribution],
    values: &[Vec<f64>],
    names: &[String],
) -> AttributionSummary {
    let d = names.len();
    let mut importance = vec![0.0; d];
    let mut rows = Vec::with_capacity(attributions.len() * d);
    for (e, (a, x)) in attributions.iter().zip(values).enumerate() {
        for j in 0..d {
            importance[j] += a.values[j].abs();
            rows.push(BeeswarmRow {
                feature: names[j].clone(),
                example: e,
                attribution: a.values[j],
                value: (!x[j].is_nan()).then_some(x[j]),
            });
        }
    }
    let mut order: Vec<usize> = (0..d).filter(|&j| importance[j] > 0.0).collect();
    order.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]));
    AttributionSummary {
        all_zero: order.is_empty(),
        ranking: order.into_iter().map(|j| (names[j].clone(), importance[j])).collect(),
        rows,
    }
}

pub fn write_beeswarm_csv<W: Write>(summary: &AttributionSummary, writer: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["feature", "example", "attribution", "value"])?;
    for r in &summary.rows {
        w.write_record([
            r.feature.clone(),
            r.example.to_string(),
            r.attribution.to_string(),
            r.value.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
