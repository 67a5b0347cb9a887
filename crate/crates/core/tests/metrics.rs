mod common;

use common::*;
use fundcast_core::eval::{
    compare_seeds, evaluate_scores, f_beta, f_beta_at_k, precision_at_k, roc_auc, EvalError, MetricConfig, EXACT_LIMIT,
};

#[test]
fn oracles_on_random_instances() {
    check_metric_oracles(600).unwrap();
}

#[test]
fn precision_examples() {
    assert_eq!(precision_at_k(&[0.9, 0.8, 0.1], &[true, true, false], 2).unwrap(), 1.0);
    let labels: Vec<bool> = (0..10).map(|i| i < 3).collect();
    assert_eq!(precision_at_k(&[0.5; 10], &labels, 10).unwrap(), 0.3);
    assert_eq!(precision_at_k(&[0.9, 0.1], &[false, true], 1).unwrap(), 0.0);
    assert!(matches!(precision_at_k(&[0.9, 0.1], &[false, true], 3), Err(EvalError::InvalidK { k: 3, n: 2 })));
}

#[test]
fn ties_use_input_order() {
    // equal scores: the earlier example enters the top k first
    assert_eq!(precision_at_k(&[1.0, 1.0, 1.0], &[true, false, false], 1).unwrap(), 1.0);
    assert_eq!(precision_at_k(&[1.0, 1.0, 1.0], &[false, true, false], 1).unwrap(), 0.0);
}

#[test]
fn f_beta_examples() {
    let f = f_beta(1.0, 0.5, 0.1);
    assert!((f - 0.990196).abs() < 5e-7, "{f}");
    for p in [0.1, 0.42, 0.9] {
        for beta in [0.1, 1.0, 3.0] {
            assert!((f_beta(p, p, beta) - p).abs() < 1e-15);
        }
    }
    assert_eq!(f_beta(0.0, 0.7, 0.1), 0.0);
    assert_eq!(f_beta(0.0, 0.0, 0.1), 0.0);
    assert!(matches!(f_beta_at_k(&[1.0, 0.0], &[false, false], 1, 0.1), Err(EvalError::NoPositives)));
}

#[test]
fn auc_examples() {
    assert_eq!(roc_auc(&[3.0, 2.0, 1.0], &[true, true, false]).unwrap(), 1.0);
    assert_eq!(roc_auc(&[0.2; 6], &[true, false, true, false, false, true]).unwrap(), 0.5);
    assert_eq!(roc_auc(&[3.0, 2.0, 1.0], &[true, false, true]).unwrap(), 0.5);
    assert!(matches!(roc_auc(&[1.0, 2.0], &[true, true]), Err(EvalError::MissingClass)));
}

#[test]
fn auc_invariant_under_increasing_transforms() {
    let mut r = rng(3);
    use rand::Rng;
    for _ in 0..100 {
        let n = r.random_range(2..40);
        let s: Vec<f64> = (0..n).map(|_| r.random_range(-3..3) as f64).collect();
        let mut y: Vec<bool> = (0..n).map(|_| r.random_bool(0.5)).collect();
        y[0] = true;
        y[1] = false;
        let a = roc_auc(&s, &y).unwrap();
        for t in [|v: f64| v.exp(), |v: f64| 3.0 * v - 7.0, |v: f64| v * v * v] {
            let ts: Vec<f64> = s.iter().map(|&v| t(v)).collect();
            assert_eq!(roc_auc(&ts, &y).unwrap(), a);
        }
    }
}

#[test]
fn report_invariant_under_positive_rescaling() {
    let s = [0.4, 0.1, 0.9, 0.9, -0.2, 0.0];
    let y = [true, false, true, false, false, true];
    let cfg = MetricConfig { k_values: vec![1, 3, 6], noise: Some(AUDIT_NOISE), ..MetricConfig::default() };
    let a = evaluate_scores(&s, &y, &cfg).unwrap();
    let scaled: Vec<f64> = s.iter().map(|v| v * 1e3).collect();
    assert_eq!(a, evaluate_scores(&scaled, &y, &cfg).unwrap());
}

#[test]
fn rank_sum_examples() {
    let same = compare_seeds(&[0.81, 0.83, 0.80, 0.82], &[0.81, 0.83, 0.80, 0.82]).unwrap();
    assert_eq!(same.p_value, 1.0);

    // only the two extreme splits of C(20, 10) = 184756 are as extreme
    let a: Vec<f64> = (1..=10).map(f64::from).collect();
    let b: Vec<f64> = (11..=20).map(f64::from).collect();
    let t = compare_seeds(&a, &b).unwrap();
    assert!(t.exact && a.len() + b.len() <= EXACT_LIMIT);
    assert_eq!(t.statistic, 55.0);
    assert!((t.p_value - 2.0 / 184_756.0).abs() < 1e-15, "{}", t.p_value);

    let mut a2 = a.clone();
    a2.reverse();
    assert_eq!(compare_seeds(&a2, &b).unwrap(), t);
    assert!(compare_seeds(&[1.0, 2.0], &b).is_err());
}

#[test]
fn rank_sum_normal_branch_is_close_to_exact() {
    // n = 22 takes the approximation; a mild shift keeps p away from 0
    let a: Vec<f64> = (0..11).map(|i| i as f64 * 1.0).collect();
    let b: Vec<f64> = (0..11).map(|i| i as f64 * 1.0 + 2.5).collect();
    let t = compare_seeds(&a, &b).unwrap();
    assert!(!t.exact);
    // scipy.stats.mannwhitneyu(a, b, method="asymptotic", use_continuity=True).pvalue
    assert!((t.p_value - 0.11503496).abs() < 1e-6, "{}", t.p_value);
}
