//! Shared input preparation: out-of-fold target encoding of categorical
//! columns and, for the smooth models, standardization with zero imputation.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::{rng_for, LearnError};

fn category_key(v: f64) -> i64 {
    if v.is_nan() {
        -1
    } else {
        v as i64
    }
}

/// Per-level positive and total counts for one categorical column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub global_rate: f64,
    pub smoothing: f64,
    pub levels: BTreeMap<i64, (u64, u64)>,
}

impl CategoryStats {
    pub fn fit(column: &[f64], labels: &[bool], smoothing: f64) -> Self {
        let mut levels: BTreeMap<i64, (u64, u64)> = BTreeMap::new();
        for (&v, &y) in column.iter().zip(labels) {
            let e = levels.entry(category_key(v)).or_default();
            e.0 += y as u64;
            e.1 += 1;
        }
        Self { global_rate: positive_rate(labels), smoothing, levels }
    }

    pub fn encode(&self, v: f64) -> f64 {
        let (pos, cnt) = self.levels.get(&category_key(v)).copied().unwrap_or((0, 0));
        smoothed(pos as f64, cnt as f64, self.smoothing, self.global_rate)
    }
}

fn positive_rate(labels: &[bool]) -> f64 {
    if labels.is_empty() {
        0.0
    } else {
        labels.iter().filter(|&&y| y).count() as f64 / labels.len() as f64
    }
}

fn smoothed(pos: f64, cnt: f64, smoothing: f64, global: f64) -> f64 {
    let den = cnt + smoothing;
    if den > 0.0 {
        (pos + smoothing * global) / den
    } else {
        global
    }
}

/// Seeded assignment of `n` rows to `folds` folds of near-equal size.
pub(crate) fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_for(seed, 0x7e));
    let mut fold = vec![0; n];
    for (k, &i) in order.iter().enumerate() {
        fold[i] = k % folds;
    }
    fold
}

/// Out-of-fold smoothed target encoding: each row is encoded with counts
/// from the other folds only. Unseen levels and empty denominators fall
/// back to the global positive rate.
pub fn target_encode(
    column: &[f64],
    labels: &[bool],
    folds: usize,
    smoothing: f64,
    seed: u64,
) -> Result<Vec<f64>, LearnError> {
    if folds < 2 {
        return Err(LearnError::InvalidConfig(format!("target encoding needs at least 2 folds, got {folds}")));
    }
    if !(smoothing >= 0.0) {
        return Err(LearnError::InvalidConfig(format!("smoothing must be non-negative, got {smoothing}")));
    }
    let global = positive_rate(labels);
    let fold = fold_assignment(column.len(), folds, seed);
    let mut total: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    let mut per_fold: Vec<BTreeMap<i64, (f64, f64)>> = vec![BTreeMap::new(); folds];
    for i in 0..column.len() {
        let key = category_key(column[i]);
        let y = labels[i] as u8 as f64;
        for m in [&mut total, &mut per_fold[fold[i]]] {
            let e = m.entry(key).or_default();
            e.0 += y;
            e.1 += 1.0;
        }
    }
    Ok((0..column.len())
        .map(|i| {
            let key = category_key(column[i]);
            let (tp, tc) = total[&key];
            let (fp, fc) = per_fold[fold[i]][&key];
            smoothed(tp - fp, tc - fc, smoothing, global)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEncoder {
    pub columns: Vec<usize>,
    pub stats: Vec<CategoryStats>,
}

impl TargetEncoder {
    pub fn encode_row(&self, row: &mut [f64]) {
        for (&c, s) in self.columns.iter().zip(&self.stats) {
            row[c] = s.encode(row[c]);
        }
    }
}

/// Signed `log1p`, then centering and scaling with training moments;
/// missing values become 0 (the column mean) after scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

fn squash(v: f64) -> f64 {
    v.signum() * v.abs().ln_1p()
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let (mut mean, mut scale) = (Vec::with_capacity(x.cols()), Vec::with_capacity(x.cols()));
        for j in 0..x.cols() {
            let vals: Vec<f64> = x.column(j).into_iter().filter(|v| !v.is_nan()).map(squash).collect();
            let n = vals.len().max(1) as f64;
            let m = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            if var > 1e-24 {
                mean.push(m);
                scale.push(var.sqrt());
            } else {
                mean.push(vals.first().copied().unwrap_or(0.0));
                scale.push(1.0);
            }
        }
        Self { mean, scale }
    }

    pub fn apply_row(&self, row: &mut [f64]) {
        for (j, v) in row.iter_mut().enumerate() {
            *v = if v.is_nan() { 0.0 } else { (squash(*v) - self.mean[j]) / self.scale[j] };
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncodingConfig {
    pub folds: usize,
    pub smoothing: f64,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        Self { folds: 5, smoothing: 10.0 }
    }
}

/// Fitted input pipeline of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prep {
    pub width: usize,
    pub encoder: TargetEncoder,
    pub scaler: Option<Standardizer>,
}

impl Prep {
    /// Fit on training rows. The returned matrix carries out-of-fold
    /// encodings; rows passed through [`Prep::transform_row`] later use the
    /// full-training statistics.
    pub fn fit(
        x: &Matrix,
        labels: &[bool],
        categorical: &[usize],
        enc: EncodingConfig,
        scale: bool,
        seed: u64,
    ) -> Result<(Prep, Matrix), LearnError> {
        let mut out = x.clone();
        let mut stats = Vec::with_capacity(categorical.len());
        for &c in categorical {
            let col = x.column(c);
            let oof = target_encode(&col, labels, enc.folds, enc.smoothing, seed ^ (c as u64).wrapping_mul(0x9e37))?;
            for (i, v) in oof.into_iter().enumerate() {
                out.set(i, c, v);
            }
            stats.push(CategoryStats::fit(&col, labels, enc.smoothing));
        }
        let scaler = scale.then(|| Standardizer::fit(&out));
        if let Some(s) = &scaler {
            for i in 0..out.rows() {
                s.apply_row(out.row_mut(i));
            }
        }
        let prep = Prep { width: x.cols(), encoder: TargetEncoder { columns: categorical.to_vec(), stats }, scaler };
        Ok((prep, out))
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        let mut r = row.to_vec();
        self.encoder.encode_row(&mut r);
        if let Some(s) = &self.scaler {
            s.apply_row(&mut r);
        }
        r
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let rows: Vec<Vec<f64>> = x.iter_rows().map(|r| self.transform_row(r)).collect();
        if rows.is_empty() {
            return Matrix::zeros(0, x.cols());
        }
        Matrix::from_rows(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_balanced_and_seeded() {
        let a = fold_assignment(23, 5, 3);
        assert_eq!(a, fold_assignment(23, 5, 3));
        for f in 0..5 {
            let c = a.iter().filter(|&&x| x == f).count();
            assert!(c == 4 || c == 5);
        }
    }

    #[test]
    fn singleton_level_gets_global_rate() {
        let col = [0.0, 0.0, 0.0, 1.0];
        let y = [true, false, true, false];
        for s in [0.0, 10.0] {
            let enc = target_encode(&col, &y, 2, s, 1).unwrap();
            assert_eq!(enc[3], 0.5);
        }
    }

    #[test]
    fn single_level_without_smoothing_is_oof_rate() {
        let col = vec![2.0; 10];
        let y: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        let fold = fold_assignment(10, 5, 9);
        let enc = target_encode(&col, &y, 5, 0.0, 9).unwrap();
        for i in 0..10 {
            let other: Vec<bool> = (0..10).filter(|&j| fold[j] != fold[i]).map(|j| y[j]).collect();
            let rate = other.iter().filter(|&&v| v).count() as f64 / other.len() as f64;
            assert!((enc[i] - rate).abs() < 1e-15);
        }
    }

    #[test]
    fn huge_smoothing_gives_global_rate() {
        let col = [0.0, 1.0, 1.0, 2.0, f64::NAN, 0.0];
        let y = [true, true, false, false, true, false];
        let enc = target_encode(&col, &y, 3, 1e12, 4).unwrap();
        assert!(enc.iter().all(|v| (v - 0.5).abs() < 1e-9));
        assert!(target_encode(&col, &y, 1, 1.0, 4).is_err());
    }

    #[test]
    fn unseen_level_at_predict_time() {
        let s = CategoryStats::fit(&[1.0, 1.0, 2.0], &[true, false, false], 10.0);
        assert!((s.encode(7.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn standardizer_imputes_zero() {
        let x = Matrix::from_rows(&[vec![1.0, 5.0], vec![3.0, 5.0], vec![f64::NAN, 5.0]]);
        let s = Standardizer::fit(&x);
        let mut r = vec![f64::NAN, 5.0];
        s.apply_row(&mut r);
        assert_eq!(r, vec![0.0, 0.0]);
    }
}
