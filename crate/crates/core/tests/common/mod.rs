//! Oracles and fixtures shared by the integration tests. Every `check_*`
//! function returns a one-line summary on success and a reason on failure,
//! so the acceptance report and the focused test files run the same code.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::{Duration, NaiveDate};
use fundcast_core::dates::YearMonth;
use fundcast_core::eval::{
    ablate_groups, corrected_auc, estimate_noise, evaluate_model, explain_examples, f_beta_at_k, precision_at_k,
    roc_auc, summarize_attributions, MetricConfig, NoiseModel, ShapleyConfig,
};
use fundcast_core::extract::{extract_events, FundingEvent, MoneyAmount, StartupIndex, VerbLexicon};
use fundcast_core::featurize::{
    build_dataset, Corpora, DatasetConfig, FeatureGroup, FeatureSchema, Label, SnapshotDataset, SnapshotExample,
};
use fundcast_core::ingest::{
    load_corpus, AuditRecord, AuditSample, MediaDate, SearchResult, SearchResultPage, StartupRecord, TextItem,
    TweetStat,
};
use fundcast_core::learn::{
    linear_objective, pu_auc_risk, pu_risk, train, train_mlp, ClassPrior, GbdtConfig, LinearConfig, LinearLoss,
    LossKind, Matrix, MlpConfig, MlpNet, Model, ModelKind, Scorer, StackedConfig, Surrogate, TrainConfig,
};
use fundcast_core::synth::{generate, SynthConfig};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub type Check = Result<String, String>;

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn date(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

fn sigmoid_loss(z: f64, y: f64) -> f64 {
    1.0 / (1.0 + (y * z).exp())
}

// ---------------------------------------------------------------- noise

pub const AUDIT_NOISE: NoiseModel = NoiseModel { alpha: 0.06, beta: 0.915 };

pub fn check_corrected_auc_triplet() -> Check {
    let mut out = Vec::new();
    for (raw, reported) in [(0.834, 0.890), (0.796, 0.847), (0.774, 0.821)] {
        let c = corrected_auc(raw, AUDIT_NOISE).map_err(|e| e.to_string())?;
        ensure((c - reported).abs() <= 0.001, || format!("{raw} -> {c:.4}, table reports {reported}"))?;
        out.push(format!("{raw}->{c:.4}"));
    }
    Ok(out.join(", "))
}

pub fn audits(false_pos: usize, hidden: usize) -> Vec<AuditRecord> {
    let pos = (0..200).map(|i| AuditRecord {
        id: format!("p{i}"),
        sample: AuditSample::LabeledPositive,
        truly_funded: i >= false_pos,
    });
    let unl =
        (0..200).map(|i| AuditRecord { id: format!("u{i}"), sample: AuditSample::Unlabeled, truly_funded: i < hidden });
    pos.chain(unl).collect()
}

pub fn check_noise_audit_figures() -> Check {
    let est = estimate_noise(&audits(17, 12)).map_err(|e| e.to_string())?;
    ensure(est.noise.beta == 1.0 - 17.0 / 200.0, || format!("beta = {}", est.noise.beta))?;
    ensure(est.noise.alpha == 12.0 / 200.0, || format!("alpha = {}", est.noise.alpha))?;
    ensure((est.noise.beta - 0.915).abs() < 1e-12 && (est.noise.alpha - 0.06).abs() < 1e-12, || {
        "audit figures differ from 0.915 / 0.06".into()
    })?;
    Ok(format!("beta = {}, alpha = {}", est.noise.beta, est.noise.alpha))
}

/// One draw of noisy labels: observed positives are truly positive with
/// probability beta, observed unlabeled with probability alpha. Scores
/// separate the true classes. Returns (clean AUC, corrected observed AUC).
pub fn noisy_draw(seed: u64, n: usize, noise: NoiseModel) -> (f64, f64) {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut scores = Vec::with_capacity(n);
    let (mut truth, mut observed) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let l = r.random_bool(0.3);
        let y = r.random_bool(if l { noise.beta } else { noise.alpha });
        scores.push(normal.sample(&mut r) + if y { 1.2 } else { 0.0 });
        truth.push(y);
        observed.push(l);
    }
    let clean = roc_auc(&scores, &truth).unwrap();
    let corrected = corrected_auc(roc_auc(&scores, &observed).unwrap(), noise).unwrap();
    (clean, corrected)
}

pub fn check_noise_round_trip() -> Check {
    let draws = 20;
    let (mut clean, mut corr) = (0.0, 0.0);
    for d in 0..draws {
        let (c, k) = noisy_draw(1000 + d, 20_000, AUDIT_NOISE);
        clean += c / draws as f64;
        corr += k / draws as f64;
    }
    ensure((clean - corr).abs() <= 0.01, || format!("clean {clean:.4} vs corrected {corr:.4}"))?;
    Ok(format!("clean {clean:.4}, corrected {corr:.4} over {draws} draws"))
}

// ---------------------------------------------------------------- PU risks

/// Case-control sample: `n` labeled positives and `n` unlabeled points from
/// the mixture, with the unlabeled points' true labels. Classes are unit
/// Gaussians centred at (1, 1) and (-1, -1).
pub struct TwoGaussians {
    pub positives: Vec<[f64; 2]>,
    pub unlabeled: Vec<[f64; 2]>,
    pub unlabeled_truth: Vec<bool>,
}

pub fn two_gaussians(seed: u64, n: usize, pi_p: f64) -> TwoGaussians {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let draw = |pos: bool, r: &mut ChaCha8Rng| {
        let c = if pos { 1.0 } else { -1.0 };
        [c + normal.sample(r), c + normal.sample(r)]
    };
    let positives = (0..n).map(|_| draw(true, &mut r)).collect();
    let unlabeled_truth: Vec<bool> = (0..n).map(|_| r.random_bool(pi_p)).collect();
    let unlabeled = unlabeled_truth.iter().map(|&y| draw(y, &mut r)).collect();
    TwoGaussians { positives, unlabeled, unlabeled_truth }
}

pub fn check_pu_oracle() -> Check {
    let pi_p = 0.3;
    let prior = ClassPrior::new(pi_p).unwrap();
    let data = two_gaussians(17, 10_000, pi_p);
    let mut worst: f64 = 0.0;
    for (w0, w1, b) in [(0.8, 0.5, -0.2), (1.0, 1.0, 0.0), (-0.3, 0.6, 0.4), (2.0, -1.0, 1.0), (0.0, 0.0, 0.0)] {
        let g = |x: &[f64; 2]| w0 * x[0] + w1 * x[1] + b;
        let sp: Vec<f64> = data.positives.iter().map(g).collect();
        let su: Vec<f64> = data.unlabeled.iter().map(g).collect();
        let upu = pu_risk(&sp, &su, prior, LossKind::UpuSigmoid).map_err(|e| e.to_string())?.total;
        // fully labeled PN risk, evaluated directly from the true labels
        let rp = sp.iter().map(|&s| sigmoid_loss(s, 1.0)).sum::<f64>() / sp.len() as f64;
        let negatives: Vec<f64> = su.iter().zip(&data.unlabeled_truth).filter(|(_, &y)| !y).map(|(s, _)| *s).collect();
        let rn = negatives.iter().map(|&s| sigmoid_loss(s, -1.0)).sum::<f64>() / negatives.len() as f64;
        let pn = pi_p * rp + (1.0 - pi_p) * rn;
        worst = worst.max((upu - pn).abs());
        ensure((upu - pn).abs() <= 0.02, || format!("scorer ({w0}, {w1}, {b}): uPU {upu:.4} vs PN {pn:.4}"))?;
    }

    // nnPU training runs never record a negative risk
    let pu = two_gaussians(23, 1500, pi_p);
    let labeled = 300;
    let rows: Vec<Vec<f64>> = pu.positives[..labeled].iter().chain(&pu.unlabeled).map(|x| x.to_vec()).collect();
    let labels: Vec<bool> = (0..rows.len()).map(|i| i < labeled).collect();
    let schema = FeatureSchema::numeric(2, FeatureGroup::General);
    let mut runs = 0;
    for (seed, lr) in [(1, 1e-2), (2, 3e-2), (3, 1e-1)] {
        let cfg = MlpConfig {
            hidden: vec![32, 32],
            learning_rate: lr,
            batch_size: 128,
            epochs: 40,
            loss: LossKind::NnpuSigmoid,
            prior: Some(pi_p),
            ..MlpConfig::default()
        };
        let m = train_mlp(&schema, &Matrix::from_rows(&rows), &labels, &cfg, seed).map_err(|e| e.to_string())?;
        let neg = m.history.iter().position(|b| b.total < 0.0);
        ensure(neg.is_none(), || format!("nnPU risk negative at epoch {neg:?} (seed {seed})"))?;
        runs += 1;
    }
    Ok(format!("max |uPU - PN| = {worst:.4} at n = 10^4; {runs} nnPU runs never negative"))
}

// ---------------------------------------------------------------- PU-AUC

/// Independent double loop over all pairs.
pub fn pu_auc_brute(sp: &[f64], su: &[f64], pi_p: f64, surrogate: Surrogate) -> f64 {
    let l = |m: f64| match surrogate {
        Surrogate::SquaredHinge => {
            let h = (1.0 - m).max(0.0);
            h * h
        }
        Surrogate::Logistic => (1.0 + (-m).exp()).ln(),
    };
    let pi_n = 1.0 - pi_p;
    let (np, nu) = (sp.len() as f64, su.len() as f64);
    let mut t1 = 0.0;
    for p in sp {
        for u in su {
            t1 += l(p - u);
        }
    }
    let mut t2 = 0.0;
    for (i, p) in sp.iter().enumerate() {
        for (j, q) in sp.iter().enumerate() {
            if i != j {
                t2 += l(p - q);
            }
        }
    }
    t1 / (pi_n * np * nu) - t2 / (pi_n * np * (np - 1.0)) + pi_p / (pi_n * (np - 1.0))
}

fn score_strategy() -> impl Strategy<Value = f64> {
    // a coarse grid mixed in so ties and exact margins occur
    prop_oneof![-4.0f64..4.0, (-8i32..=8).prop_map(|k| k as f64 * 0.5)]
}

pub fn check_pu_auc_brute_force(cases: u32) -> Check {
    let mut runner = TestRunner::new(PropConfig { cases, failure_persistence: None, ..PropConfig::default() });
    let strategy = (
        prop::collection::vec(score_strategy(), 2..=20),
        prop::collection::vec(score_strategy(), 1..=20),
        0.02f64..0.98,
        any::<bool>(),
    );
    let worst = std::cell::Cell::new(0.0f64);
    runner
        .run(&strategy, |(sp, su, pi_p, hinge)| {
            let s = if hinge { Surrogate::SquaredHinge } else { Surrogate::Logistic };
            let got = pu_auc_risk(&sp, &su, ClassPrior::new(pi_p).unwrap(), s).unwrap();
            let want = pu_auc_brute(&sp, &su, pi_p, s);
            let err = (got - want).abs() / want.abs().max(1.0);
            worst.set(worst.get().max(err));
            prop_assert!(err <= 1e-10, "risk {} vs brute force {}", got, want);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("{cases} instances, worst relative error {:.1e}", worst.get()))
}

// ---------------------------------------------------------------- gradients

/// Norm-wise relative error between analytic and central-difference gradients.
pub fn gradient_error(f: impl Fn(&[f64]) -> (f64, Vec<f64>), x: &[f64], h: f64) -> f64 {
    let (_, g) = f(x);
    let mut num = vec![0.0; x.len()];
    let mut p = x.to_vec();
    for i in 0..x.len() {
        p[i] = x[i] + h;
        let up = f(&p).0;
        p[i] = x[i] - h;
        let down = f(&p).0;
        p[i] = x[i];
        num[i] = (up - down) / (2.0 * h);
    }
    let diff: f64 = g.iter().zip(&num).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let scale = g.iter().map(|a| a * a).sum::<f64>().sqrt().max(num.iter().map(|a| a * a).sum::<f64>().sqrt());
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

fn random_problem(r: &mut ChaCha8Rng, n: usize, d: usize) -> (Matrix, Vec<bool>) {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
    let mut labels: Vec<bool> = (0..n).map(|_| r.random_bool(0.4)).collect();
    labels[0] = true;
    labels[1] = false;
    (Matrix::from_rows(&rows), labels)
}

/// Away from the nnPU kink the risk is smooth; points too close to it are
/// skipped and redrawn.
fn near_kink(loss: LossKind, bracket: f64) -> bool {
    loss == LossKind::NnpuSigmoid && bracket.abs() < 1e-3
}

pub fn check_gradients(points: usize) -> Check {
    let h = 1e-5;
    let mut r = rng(99);
    let mut worst: f64 = 0.0;
    let losses = [LossKind::PnSigmoid, LossKind::UpuSigmoid, LossKind::NnpuSigmoid];
    for loss in losses {
        let linear_loss = match loss {
            LossKind::PnSigmoid => LinearLoss::PnSigmoid,
            LossKind::UpuSigmoid => LinearLoss::UpuSigmoid,
            LossKind::NnpuSigmoid => LinearLoss::NnpuSigmoid,
        };
        let (mut lin, mut mlp) = (0, 0);
        while lin < points {
            let (x, labels) = random_problem(&mut r, 24, 4);
            let prior = ClassPrior::new(r.random_range(0.1..0.6)).unwrap();
            let params: Vec<f64> = (0..5).map(|_| r.random_range(-1.5..1.5)).collect();
            let scores: Vec<f64> =
                x.iter_rows().map(|row| row.iter().zip(&params).map(|(a, b)| a * b).sum::<f64>() + params[4]).collect();
            let (sp, su) = split(&scores, &labels);
            let b = pu_risk(&sp, &su, prior, loss).unwrap();
            if near_kink(loss, b.r_u_minus - prior.pi_p() * b.r_p_minus) {
                continue;
            }
            let err = gradient_error(|p| linear_objective(p, &x, &labels, linear_loss, prior, 0.01), &params, h);
            ensure(err <= 1e-4, || format!("linear {loss:?}: relative error {err:.2e}"))?;
            worst = worst.max(err);
            lin += 1;
        }
        while mlp < points {
            let (x, labels) = random_problem(&mut r, 16, 3);
            let prior = ClassPrior::new(r.random_range(0.1..0.6)).unwrap();
            let net = MlpNet::init(vec![3, 5, 4, 1], r.random());
            let params: Vec<f64> = net.params.iter().map(|p| p + r.random_range(-0.3..0.3)).collect();
            let (b, _) = net.risk_and_grad(&params, &x, &labels, loss, prior);
            if near_kink(loss, b.r_u_minus - prior.pi_p() * b.r_p_minus) {
                continue;
            }
            let f = |p: &[f64]| {
                let (b, g) = net.risk_and_grad(p, &x, &labels, loss, prior);
                (b.total, g)
            };
            let err = gradient_error(f, &params, h);
            ensure(err <= 1e-4, || format!("mlp {loss:?}: relative error {err:.2e}"))?;
            worst = worst.max(err);
            mlp += 1;
        }
    }
    Ok(format!("{} points per risk and model, worst relative error {worst:.1e}", points))
}

pub fn split(scores: &[f64], labels: &[bool]) -> (Vec<f64>, Vec<f64>) {
    let sp = scores.iter().zip(labels).filter(|(_, &y)| y).map(|(s, _)| *s).collect();
    let su = scores.iter().zip(labels).filter(|(_, &y)| !y).map(|(s, _)| *s).collect();
    (sp, su)
}

// ---------------------------------------------------------------- extraction

pub fn fixture_events() -> (Vec<FundingEvent>, Vec<FundingEvent>) {
    let dir = fixture_dir().join("events");
    let startups = load_corpus::<StartupRecord>(dir.join("startups.jsonl")).unwrap().into_records();
    let texts = load_corpus::<TextItem>(dir.join("texts.jsonl")).unwrap().into_records();
    let gold = load_corpus::<FundingEvent>(dir.join("gold_events.jsonl")).unwrap().into_records();
    let got = extract_events(&texts, &StartupIndex::build(&startups), &VerbLexicon::default());
    (got, gold)
}

pub fn check_event_fixture() -> Check {
    let (got, gold) = fixture_events();
    let dir = fixture_dir().join("events");
    let texts = load_corpus::<TextItem>(dir.join("texts.jsonl")).unwrap().into_records();
    ensure(texts.len() >= 30, || format!("fixture has only {} texts", texts.len()))?;
    if got != gold {
        let missing: Vec<_> = gold.iter().filter(|g| !got.contains(g)).collect();
        let extra: Vec<_> = got.iter().filter(|g| !gold.contains(g)).collect();
        return Err(format!("missing {missing:?}; unexpected {extra:?}"));
    }
    Ok(format!("{} texts, {} events match the gold file", texts.len(), gold.len()))
}

// ---------------------------------------------------------------- leakage

pub fn corpora_of(c: fundcast_core::synth::SynthCorpus) -> Corpora {
    let index = StartupIndex::build(&c.startups);
    let events = extract_events(&c.texts, &index, &VerbLexicon::default());
    Corpora { startups: c.startups, events, tweet_stats: c.tweet_stats, search_pages: c.search_pages, social: c.social }
}

/// Add records dated on or after `d` to a copy of `corpora`.
pub fn inject_future(corpora: &Corpora, d: NaiveDate, r: &mut ChaCha8Rng) -> Corpora {
    let mut out = corpora.clone();
    let n = out.startups.len();
    for _ in 0..r.random_range(1..=20) {
        let s = out.startups[r.random_range(0..n)].id.clone();
        let when = d + Duration::days(r.random_range(0..900));
        match r.random_range(0..4) {
            0 => out.events.push(FundingEvent {
                startup_id: s,
                amount: MoneyAmount::new(fundcast_core::extract::Currency::Usd, r.random_range(1e5..5e7)),
                date: when,
                source_item_ids: vec!["future".into()],
            }),
            1 => {
                let mut hashtags = BTreeMap::new();
                hashtags.insert("#future".to_string(), r.random_range(1..50));
                hashtags.insert("#ai".to_string(), r.random_range(1..50));
                out.tweet_stats.push(TweetStat {
                    startup_id: s,
                    // the month containing d is not complete before d
                    month: YearMonth::of(when),
                    tweets_posted: r.random_range(0..500),
                    likes_mean: 3.0,
                    likes_max: 9.0,
                    retweets_mean: 1.0,
                    retweets_max: 2.0,
                    modal_language: Some("fr".into()),
                    hashtags,
                    distinct_mentioners: r.random_range(0..100),
                })
            }
            2 => out.search_pages.push(SearchResultPage {
                startup_id: s.clone(),
                query_date_range: (when - Duration::days(r.random_range(0..400)), when),
                total_results_reported: r.random_range(0..100_000),
                results: vec![SearchResult {
                    rank: 1,
                    domain: "future.example".into(),
                    snippet: out.startups.iter().find(|x| x.id == s).unwrap().name.clone(),
                }],
            }),
            _ => {
                let st = out.startups.iter_mut().find(|x| x.id == s).unwrap();
                st.media_creation_dates.push(MediaDate { source: "future".into(), date: when });
            }
        }
    }
    out
}

pub fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

pub fn check_leakage(trials: u64) -> Check {
    let corpora = corpora_of(generate(&SynthConfig { n_startups: 40, seed: 5, ..SynthConfig::default() }));
    let mut compared = 0usize;
    for t in 0..trials {
        let mut r = rng(500 + t);
        let d = date("2013-06-01") + Duration::days(r.random_range(0..2000));
        let cfg =
            DatasetConfig { train_cutoffs: vec![d], test_cutoffs: vec![], vocab_size: 20, ..DatasetConfig::default() };
        let base = build_dataset(&cfg, &corpora).map_err(|e| e.to_string())?;
        let injected = build_dataset(&cfg, &inject_future(&corpora, d, &mut r)).map_err(|e| e.to_string())?;
        ensure(base.schema == injected.schema, || format!("trial {t}: schema changed at cutoff {d}"))?;
        for (a, b) in base.train.iter().zip(&injected.train) {
            ensure(a.startup_id == b.startup_id && same_bits(&a.features, &b.features), || {
                format!("trial {t}: features of {} at {d} changed", a.startup_id)
            })?;
            compared += 1;
        }
    }
    Ok(format!("{trials} trials, {compared} snapshots bit-identical"))
}

// ---------------------------------------------------------------- metrics

pub fn brute_precision(scores: &[f64], labels: &[bool], k: usize) -> f64 {
    // position of i = number of items ranked strictly before it
    let hits = (0..scores.len())
        .filter(|&i| {
            let before =
                (0..scores.len()).filter(|&j| scores[j] > scores[i] || (scores[j] == scores[i] && j < i)).count();
            before < k && labels[i]
        })
        .count();
    hits as f64 / k as f64
}

pub fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut sum, mut pairs) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] && !labels[j] {
                pairs += 1.0;
                sum += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    sum / pairs
}

pub fn check_metric_oracles(instances: usize) -> Check {
    let f = f_beta_at_k(&[0.9, 0.8, 0.1, 0.0], &[true, true, true, true], 2, 0.1).unwrap();
    ensure((f - 0.990196).abs() < 5e-7, || format!("P=1, R=0.5 gives {f}"))?;
    let mut r = rng(4242);
    for case in 0..instances {
        let n = r.random_range(2..=50);
        let scores: Vec<f64> = (0..n).map(|_| r.random_range(0..8) as f64 * 0.25).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| r.random_bool(0.35)).collect();
        labels[r.random_range(0..n)] = true;
        let neg = r.random_range(0..n);
        if labels.iter().all(|&y| y) {
            labels[neg] = false;
        }
        let k = r.random_range(1..=n);
        let p = precision_at_k(&scores, &labels, k).unwrap();
        let bp = brute_precision(&scores, &labels, k);
        ensure(p == bp, || format!("case {case}: P@{k} {p} vs {bp}"))?;
        let total = labels.iter().filter(|&&y| y).count() as f64;
        let rec = bp * k as f64 / total;
        let beta2 = 0.01;
        let bf = if bp + rec == 0.0 { 0.0 } else { (1.0 + beta2) * bp * rec / (beta2 * bp + rec) };
        let fb = f_beta_at_k(&scores, &labels, k, 0.1).unwrap();
        ensure((fb - bf).abs() < 1e-12, || format!("case {case}: F@{k} {fb} vs {bf}"))?;
        let a = roc_auc(&scores, &labels).unwrap();
        let ba = brute_auc(&scores, &labels);
        ensure((a - ba).abs() < 1e-12, || format!("case {case}: AUC {a} vs {ba}"))?;
    }
    Ok(format!("{instances} random instances plus the 0.990196 case"))
}

// ---------------------------------------------------------------- learners

pub fn xor_data() -> (Matrix, Vec<bool>) {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for rep in 0..10 {
        for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
            let jitter = rep as f64 * 0.01;
            rows.push(vec![a + jitter, b - jitter]);
            labels.push((a == 1.0) != (b == 1.0));
        }
    }
    (Matrix::from_rows(&rows), labels)
}

pub fn examples_from(x: &Matrix, labels: &[bool]) -> Vec<SnapshotExample> {
    x.iter_rows()
        .zip(labels)
        .enumerate()
        .map(|(i, (row, &y))| SnapshotExample {
            startup_id: format!("e{i:04}"),
            cutoff: date("2017-09-01"),
            features: row.to_vec(),
            label: if y { Label::Positive } else { Label::Unlabeled },
        })
        .collect()
}

pub fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

pub fn model_json(m: &Model) -> String {
    let mut buf = Vec::new();
    m.to_writer(&mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

/// Small synthetic snapshot dataset.
pub fn small_dataset(n_startups: usize, seed: u64) -> SnapshotDataset {
    let corpora = corpora_of(generate(&SynthConfig { n_startups, seed, ..SynthConfig::default() }));
    build_dataset(&DatasetConfig { vocab_size: 20, ..DatasetConfig::default() }, &corpora).unwrap()
}

pub fn check_learner_sanity() -> Check {
    let (x, labels) = xor_data();
    let schema = FeatureSchema::numeric(2, FeatureGroup::General);
    let cfg = TrainConfig::Gbdt(GbdtConfig {
        n_trees: 30,
        learning_rate: 0.5,
        max_depth: 2,
        lambda: 1.0,
        ..GbdtConfig::default()
    });
    let model = train(&cfg, &schema, &examples_from(&x, &labels), 1).map_err(|e| e.to_string())?;
    let correct = x.iter_rows().zip(&labels).filter(|(row, &y)| (model.score(row) > 0.0) == y).count();
    ensure(correct == labels.len(), || format!("depth-2 GBDT fits {correct}/{} XOR points", labels.len()))?;

    let ds = small_dataset(120, 3);
    let gbdt = train(&TrainConfig::Gbdt(GbdtConfig { n_trees: 60, ..GbdtConfig::default() }), &ds.schema, &ds.train, 4)
        .map_err(|e| e.to_string())?;
    let fundcast_core::learn::ModelParams::Gbdt(g) = &gbdt.params else { unreachable!() };
    let rising = g.train_loss.windows(2).position(|w| w[1] > w[0]);
    ensure(rising.is_none(), || format!("GBDT training loss rose after round {rising:?}"))?;

    let rf = TrainConfig::default_for(ModelKind::RandomForest);
    let mlp = TrainConfig::Mlp(MlpConfig { hidden: vec![16, 16], epochs: 3, batch_size: 100, ..MlpConfig::default() });
    for cfg in [rf, mlp] {
        let a = in_pool(1, || train(&cfg, &ds.schema, &ds.train, 11)).map_err(|e| e.to_string())?;
        let b = in_pool(3, || train(&cfg, &ds.schema, &ds.train, 11)).map_err(|e| e.to_string())?;
        ensure(model_json(&a) == model_json(&b), || {
            format!("{:?} differs between runs with the same seed", cfg.kind())
        })?;
    }
    Ok(format!(
        "XOR fit 40/40, loss monotone over {} rounds, RF and MLP reproducible across 1 and 3 workers",
        g.train_loss.len()
    ))
}

// ---------------------------------------------------------------- Shapley

pub fn check_shapley_efficiency() -> Check {
    let ds = small_dataset(120, 8);
    let cfg = ShapleyConfig::default();
    let background: Vec<Vec<f64>> = ds.train.iter().step_by(7).map(|e| e.features.clone()).collect();
    let explained: Vec<Vec<f64>> = ds.test.iter().take(3).map(|e| e.features.clone()).collect();
    let configs = [
        TrainConfig::Linear(LinearConfig::default()),
        TrainConfig::Gbdt(GbdtConfig { n_trees: 40, max_depth: 4, ..GbdtConfig::default() }),
        TrainConfig::Stacked(StackedConfig {
            final_model: GbdtConfig { n_trees: 40, max_depth: 4, ..GbdtConfig::default() },
            ..StackedConfig::default()
        }),
    ];
    let mut worst: f64 = 0.0;
    for tc in &configs {
        let model = train(tc, &ds.schema, &ds.train, 2).map_err(|e| e.to_string())?;
        let attrs = explain_examples(&model, &explained, &background, &cfg).map_err(|e| e.to_string())?;
        for (a, x) in attrs.iter().zip(&explained) {
            let gap = a.efficiency_gap();
            ensure((a.score - model.score(x)).abs() < 1e-12, || "attribution score differs from model score".into())?;
            ensure(gap.abs() <= 3.0 * a.sum_std_error + 1e-9, || {
                format!("{:?}: gap {gap:e} exceeds 3 SE ({:e})", tc.kind(), a.sum_std_error)
            })?;
            worst = worst.max(gap.abs());
        }
    }
    Ok(format!(
        "linear, GBDT, stacked at {} permutations x {} background rows; worst |gap| {worst:.1e}",
        cfg.permutations, cfg.background_rows
    ))
}

// ---------------------------------------------------------------- end to end

pub fn e2e_config(kind: ModelKind) -> TrainConfig {
    match TrainConfig::default_for(kind) {
        // the default schedule (5 epochs at 1e-4) barely moves on 2,000 rows,
        // and a 20% prior lets the bounded loss settle on all-negative
        TrainConfig::Mlp(m) => {
            TrainConfig::Mlp(MlpConfig { learning_rate: 1e-3, epochs: 20, batch_size: 200, prior: Some(0.5), ..m })
        }
        other => other,
    }
}

pub fn check_end_to_end() -> Check {
    let start = std::time::Instant::now();
    let synth = generate(&SynthConfig::default());
    let planted = synth.planted.len();
    let corpora = corpora_of(synth);
    ensure(corpora.events.len() * 10 >= planted * 9, || {
        format!("extracted {} events for {planted} planted rounds", corpora.events.len())
    })?;
    let dcfg = DatasetConfig { vocab_size: 50, ..DatasetConfig::default() };
    let ds = build_dataset(&dcfg, &corpora).map_err(|e| e.to_string())?;
    ensure(dcfg.train_cutoffs.len() == 4 && dcfg.test_cutoffs.len() == 1, || "cutoff structure".into())?;
    ensure(ds.train.len() == 4 * 500 && ds.test.len() == 500, || ds.summary())?;

    let metrics = MetricConfig { noise: Some(AUDIT_NOISE), ..MetricConfig::default() };
    let mut aucs = BTreeMap::new();
    let mut models = BTreeMap::new();
    for kind in ModelKind::ALL {
        let model = train(&e2e_config(kind), &ds.schema, &ds.train, 1).map_err(|e| format!("{kind:?}: {e}"))?;
        let report = evaluate_model(&model, &ds, &metrics).map_err(|e| e.to_string())?;
        aucs.insert(kind.name(), report.auc_raw);
        models.insert(kind.name(), model);
    }
    for (name, auc) in &aucs {
        ensure(*auc >= 0.7, || format!("{name} test AUC {auc:.3} < 0.7"))?;
    }
    let lr = aucs["linear"];
    ensure(aucs["gbdt"] >= lr && aucs["stacked"] >= lr, || format!("ensembles below LR: {aucs:?}"))?;

    let ablation = ablate_groups(&ds, &e2e_config(ModelKind::Gbdt), 1, &metrics).map_err(|e| e.to_string())?;
    ensure(ablation.len() == 4, || format!("{} ablation rows", ablation.len()))?;

    let stacked = &models["stacked"];
    let background: Vec<Vec<f64>> = ds.train.iter().step_by(50).map(|e| e.features.clone()).collect();
    let top: Vec<Vec<f64>> = ds.test.iter().take(4).map(|e| e.features.clone()).collect();
    let attrs = explain_examples(stacked, &top, &background, &ShapleyConfig::default()).map_err(|e| e.to_string())?;
    let names: Vec<String> = ds.schema.names().into_iter().map(String::from).collect();
    let summary = summarize_attributions(&attrs, &top, &names);
    ensure(!summary.all_zero, || "all attributions zero".into())?;

    let listed: Vec<String> = aucs.iter().map(|(k, v)| format!("{k} {v:.3}")).collect();
    Ok(format!("AUC {}; ablation 4 rows; {:.0?}", listed.join(", "), start.elapsed()))
}
