use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::metrics::midranks;
use super::EvalError;

/// Combined sample size up to which the null distribution is enumerated.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSumTest {
    /// Sum of the midranks of the first sample.
    pub statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub exact: bool,
}

/// Two-sided Wilcoxon rank-sum test of two independent samples, such as one
/// metric over several seeds for two models.
pub fn compare_seeds(a: &[f64], b: &[f64]) -> Result<RankSumTest, EvalError> {
    if a.len() < 3 || b.len() < 3 {
        return Err(EvalError::TooFewSamples { a: a.len(), b: b.len() });
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(EvalError::InvalidInput("rank-sum samples contain NaN".into()));
    }
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&all);
    let statistic: f64 = ranks[..a.len()].iter().sum();
    let p_value = if all.len() <= EXACT_LIMIT {
        exact_p(&ranks, a.len(), statistic)
    } else {
        normal_p(&ranks, a.len(), statistic)
    };
    Ok(RankSumTest { statistic, p_value, exact: all.len() <= EXACT_LIMIT })
}

/// Enumerate the permutation null of the rank sum over all `C(N, n_a)`
/// subsets. Midranks are doubled so every sum is an integer.
fn exact_p(ranks: &[f64], n_a: usize, statistic: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    // ways[k][s]: subsets of size k with doubled sum s
    let mut ways = vec![vec![0.0f64; max_sum + 1]; n_a + 1];
    ways[0][0] = 1.0;
    for &r in &doubled {
        for k in (1..=n_a).rev() {
            for s in (r..=max_sum).rev() {
                let add = ways[k - 1][s - r];
                if add != 0.0 {
                    ways[k][s] += add;
                }
            }
        }
    }
    let n = ranks.len();
    let mean2 = (n_a * (n + 1)) as i64;
    let observed = ((2.0 * statistic).round() as i64 - mean2).abs();
    let total: f64 = ways[n_a].iter().sum();
    let extreme: f64 =
        ways[n_a].iter().enumerate().filter(|&(s, _)| (s as i64 - mean2).abs() >= observed).map(|(_, w)| w).sum();
    (extreme / total).min(1.0)
}

/// Normal approximation with tie-corrected variance and continuity correction.
fn normal_p(ranks: &[f64], n_a: usize, statistic: f64) -> f64 {
    let n = ranks.len() as f64;
    let (na, nb) = (n_a as f64, n - n_a as f64);
    let mean = na * (n + 1.0) / 2.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let dev = ((statistic - mean).abs() - 0.5).max(0.0);
    let z = dev / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * (1.0 - normal.cdf(z))).min(1.0)
}
