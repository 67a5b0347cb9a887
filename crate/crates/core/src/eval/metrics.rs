use super::EvalError;

/// Indices sorted by descending score; equal scores keep input order.
pub fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

fn check_lengths(scores: &[f64], labels: &[bool]) -> Result<(), EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::InvalidInput(format!("{} scores but {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(EvalError::InvalidInput("scores contain NaN".into()));
    }
    Ok(())
}

fn hits_at_k(scores: &[f64], labels: &[bool], k: usize) -> Result<usize, EvalError> {
    check_lengths(scores, labels)?;
    if k == 0 || k > scores.len() {
        return Err(EvalError::InvalidK { k, n: scores.len() });
    }
    Ok(ranking(scores)[..k].iter().filter(|&&i| labels[i]).count())
}

/// Fraction of positives among the `k` highest-scored examples.
pub fn precision_at_k(scores: &[f64], labels: &[bool], k: usize) -> Result<f64, EvalError> {
    Ok(hits_at_k(scores, labels, k)? as f64 / k as f64)
}

/// `F_beta` of precision and recall restricted to the top `k`.
pub fn f_beta_at_k(scores: &[f64], labels: &[bool], k: usize, beta: f64) -> Result<f64, EvalError> {
    if !(beta > 0.0) {
        return Err(EvalError::InvalidInput(format!("F-score beta must be positive, got {beta}")));
    }
    let hits = hits_at_k(scores, labels, k)?;
    let total = labels.iter().filter(|&&y| y).count();
    if total == 0 {
        return Err(EvalError::NoPositives);
    }
    Ok(f_beta(hits as f64 / k as f64, hits as f64 / total as f64, beta))
}

pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let den = b2 * precision + recall;
    if den == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / den
    }
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    check_lengths(scores, labels)?;
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::MissingClass);
    }
    let ranks = midranks(scores);
    let pos_rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &y)| y).map(|(r, _)| r).sum();
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((pos_rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// 1-based ranks in ascending order, tied values sharing their mean rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let r = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}
