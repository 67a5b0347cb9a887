//! Histogram-based binary decision trees shared by the forest and the
//! boosted ensemble.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;

/// Feature values quantized to bins. Bin 0 holds missing values; bin
/// `b >= 1` holds values `v` with `thresholds[b - 2] < v <= thresholds[b - 1]`.
#[derive(Debug, Clone)]
pub(crate) struct Binned {
    /// Column-major bin indices.
    pub bins: Vec<Vec<u16>>,
    pub thresholds: Vec<Vec<f64>>,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

fn column_thresholds(column: &[f64], max_bins: usize) -> Vec<f64> {
    let mut vals: Vec<f64> = column.iter().copied().filter(|v| !v.is_nan()).collect();
    vals.sort_by(f64::total_cmp);
    let mut distinct = vals.clone();
    distinct.dedup();
    if distinct.len() <= max_bins {
        return distinct.windows(2).map(|w| midpoint(w[0], w[1])).collect();
    }
    let top = *distinct.last().expect("non-empty");
    let mut t: Vec<f64> = (1..max_bins).map(|k| vals[k * vals.len() / max_bins]).filter(|&q| q < top).collect();
    t.dedup();
    t
}

impl Binned {
    pub fn new(x: &Matrix, max_bins: usize) -> Self {
        let max_bins = max_bins.clamp(2, u16::MAX as usize - 1);
        let (thresholds, bins): (Vec<_>, Vec<_>) = (0..x.cols())
            .into_par_iter()
            .map(|j| {
                let col = x.column(j);
                let t = column_thresholds(&col, max_bins);
                let b = col
                    .iter()
                    .map(|&v| if v.is_nan() { 0 } else { 1 + t.partition_point(|&c| c < v) as u16 })
                    .collect();
                (t, b)
            })
            .unzip();
        Self { bins, thresholds }
    }

    pub fn cols(&self) -> usize {
        self.bins.len()
    }

    fn n_bins(&self, j: usize) -> usize {
        self.thresholds[j].len() + 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Criterion {
    /// Weighted Gini impurity on `g` = positive weight, `h` = weight.
    Gini,
    /// Second-order boosting gain with leaf penalty `lambda`.
    Newton { lambda: f64 },
}

impl Criterion {
    /// Node quality; a split's gain is children minus parent.
    fn quality(self, s: &Stats) -> f64 {
        match self {
            Criterion::Gini => {
                if s.h <= 0.0 {
                    0.0
                } else {
                    -2.0 * s.g * (s.h - s.g) / s.h
                }
            }
            Criterion::Newton { lambda } => {
                let d = s.h + lambda;
                if d > 0.0 {
                    s.g * s.g / d
                } else {
                    0.0
                }
            }
        }
    }

    fn leaf(self, s: &Stats) -> f64 {
        match self {
            Criterion::Gini => {
                if s.h > 0.0 {
                    s.g / s.h
                } else {
                    0.0
                }
            }
            Criterion::Newton { lambda } => {
                let d = s.h + lambda;
                if d > 0.0 {
                    -s.g / d
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Stats {
    g: f64,
    h: f64,
    /// Row weight, used for the minimum leaf size.
    c: f64,
}

impl Stats {
    fn add(&mut self, o: &Stats) {
        self.g += o.g;
        self.h += o.h;
        self.c += o.c;
    }

    fn sub(&self, o: &Stats) -> Stats {
        Stats { g: self.g - o.g, h: self.h - o.h, c: self.c - o.c }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct GrowConfig {
    pub criterion: Criterion,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features considered per node; `None` means all.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, missing_left: bool, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn constant(value: f64) -> Self {
        Self { nodes: vec![TreeNode::Leaf { value }] }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split { feature, threshold, missing_left, left, right } => {
                    let v = row[*feature];
                    let go_left = if v.is_nan() { *missing_left } else { v <= *threshold };
                    k = if go_left { *left } else { *right };
                }
            }
        }
    }

    pub fn scale_leaves(&mut self, factor: f64) {
        for n in &mut self.nodes {
            if let TreeNode::Leaf { value } = n {
                *value *= factor;
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, k: usize) -> usize {
            match &t.nodes[k] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    bin: usize,
    missing_left: bool,
}

/// Best split of one feature over the node's rows. Ties keep the lowest
/// bin, and missing-right before missing-left.
fn best_for_feature(
    data: &Binned,
    j: usize,
    rows: &[usize],
    g: &[f64],
    h: &[f64],
    w: &[f64],
    parent: &Stats,
    cfg: &GrowConfig,
) -> Option<Candidate> {
    let nb = data.n_bins(j);
    let mut hist = vec![Stats::default(); nb];
    let col = &data.bins[j];
    for &i in rows {
        let s = &mut hist[col[i] as usize];
        s.g += g[i];
        s.h += h[i];
        s.c += w[i];
    }
    let missing = hist[0];
    let base = cfg.criterion.quality(parent);
    let min_leaf = cfg.min_samples_leaf.max(1) as f64;
    let mut left = Stats::default();
    let mut best: Option<Candidate> = None;
    for b in 1..nb {
        left.add(&hist[b]);
        let right_nm = parent.sub(&missing).sub(&left);
        for missing_left in [false, true] {
            let (l, r) = if missing_left {
                let mut l = left;
                l.add(&missing);
                (l, right_nm)
            } else {
                let mut r = right_nm;
                r.add(&missing);
                (left, r)
            };
            if l.c < min_leaf || r.c < min_leaf {
                continue;
            }
            let gain = cfg.criterion.quality(&l) + cfg.criterion.quality(&r) - base;
            if best.is_none_or(|c| gain > c.gain) {
                best = Some(Candidate { gain, feature: j, bin: b, missing_left });
            }
        }
    }
    best
}

/// Grow one tree. `g`, `h` and `w` are per-row statistics and weights; only
/// `rows` take part.
pub(crate) fn grow_tree(
    data: &Binned,
    rows: Vec<usize>,
    g: &[f64],
    h: &[f64],
    w: &[f64],
    cfg: &GrowConfig,
    rng: &mut impl Rng,
) -> Tree {
    let mut nodes = Vec::new();
    let mut stack = vec![(rows, 0usize, usize::MAX, false)];
    while let Some((rows, depth, parent, is_left)) = stack.pop() {
        let idx = nodes.len();
        if parent != usize::MAX {
            if let TreeNode::Split { left, right, .. } = &mut nodes[parent] {
                if is_left {
                    *left = idx;
                } else {
                    *right = idx;
                }
            }
        }
        let mut stats = Stats::default();
        let mut g2 = 0.0;
        for &i in &rows {
            stats.add(&Stats { g: g[i], h: h[i], c: w[i] });
            g2 += w[i] * (g[i] / w[i].max(1e-300)).powi(2);
        }
        let pure = match cfg.criterion {
            Criterion::Gini => stats.g <= 0.0 || stats.g >= stats.h,
            Criterion::Newton { .. } => g2 - stats.g * stats.g / stats.c.max(1e-300) <= 1e-12 * g2.max(1e-300),
        };
        let can_split =
            !pure && cfg.max_depth.is_none_or(|d| depth < d) && stats.c >= 2.0 * cfg.min_samples_leaf.max(1) as f64;
        let split = if can_split {
            let features: Vec<usize> = match cfg.max_features {
                Some(k) if k < data.cols() => {
                    let mut f = sample(rng, data.cols(), k).into_vec();
                    f.sort_unstable();
                    f
                }
                _ => (0..data.cols()).collect(),
            };
            let per_feature: Vec<Option<Candidate>> =
                features.par_iter().map(|&j| best_for_feature(data, j, &rows, g, h, w, &stats, cfg)).collect();
            per_feature.into_iter().flatten().fold(None, |best: Option<Candidate>, c| match best {
                Some(b) if c.gain <= b.gain => Some(b),
                _ => Some(c),
            })
        } else {
            None
        };
        match split {
            Some(c) if c.gain >= -1e-12 => {
                let col = &data.bins[c.feature];
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| {
                    let b = col[i] as usize;
                    if b == 0 {
                        c.missing_left
                    } else {
                        b <= c.bin
                    }
                });
                let thresholds = &data.thresholds[c.feature];
                // the top bin has no upper threshold: everything non-missing goes left
                let threshold = thresholds.get(c.bin - 1).copied().unwrap_or(f64::MAX);
                nodes.push(TreeNode::Split {
                    feature: c.feature,
                    threshold,
                    missing_left: c.missing_left,
                    left: 0,
                    right: 0,
                });
                stack.push((r, depth + 1, idx, false));
                stack.push((l, depth + 1, idx, true));
            }
            _ => nodes.push(TreeNode::Leaf { value: cfg.criterion.leaf(&stats) }),
        }
    }
    Tree { nodes }
}
