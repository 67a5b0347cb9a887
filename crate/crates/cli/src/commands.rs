use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::Datelike;
use fundcast_core::eval::{
    ablate_groups, country_counts, estimate_noise, evaluate_model, explain_examples, ranking, summarize_attributions,
    write_ablation_csv, write_beeswarm_csv, write_country_csv, NoiseModel,
};
use fundcast_core::extract::{extract_events, CountryTable, FundingEvent, StartupIndex, VerbLexicon};
use fundcast_core::featurize::{build_dataset_with, read_dataset, write_dataset, Corpora, SnapshotDataset};
use fundcast_core::ingest::{
    load_corpus, write_corpus, AuditRecord, Record, SearchResultPage, SocialPresence, StartupRecord, TextItem,
    TweetStat,
};
use fundcast_core::learn::{predict, train, Model, Scorer};
use serde::Serialize;
use serde_json::json;

use crate::config::{NoiseSource, Resolved};
use crate::error::{training_error, Classify, CliError};
use crate::manifest::{Manifest, Recorder};

pub const EVENTS_FILE: &str = "events.jsonl";
pub const DATASET_FILE: &str = "dataset.jsonl";
pub const MODEL_FILE: &str = "model.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    ExtractEvents,
    BuildDataset,
    Train,
    Evaluate,
    Ablate,
    Explain,
    AuditNoise,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::ExtractEvents,
        Command::BuildDataset,
        Command::Train,
        Command::Evaluate,
        Command::Ablate,
        Command::Explain,
        Command::AuditNoise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::ExtractEvents => "extract-events",
            Command::BuildDataset => "build-dataset",
            Command::Train => "train",
            Command::Evaluate => "evaluate",
            Command::Ablate => "ablate",
            Command::Explain => "explain",
            Command::AuditNoise => "audit-noise",
        }
    }

    pub fn parse(s: &str) -> Option<Command> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Stem of the manifest file written by the command.
    fn manifest_stem(self) -> &'static str {
        match self {
            Command::ExtractEvents => "events",
            Command::BuildDataset => "dataset",
            Command::Train => "model",
            Command::Evaluate => "report",
            Command::Ablate => "ablation",
            Command::Explain => "attributions",
            Command::AuditNoise => "noise",
        }
    }
}

/// Input files of one command run. Roles not given explicitly fall back to
/// the corpus paths of the config or to artifacts in the output directory.
pub struct Run<'a> {
    pub resolved: &'a Resolved,
    pub explicit: BTreeMap<String, PathBuf>,
}

impl Run<'_> {
    fn out_dir(&self) -> &Path {
        &self.resolved.config.output_dir
    }

    fn input(&self, role: &str) -> PathBuf {
        if let Some(p) = self.explicit.get(role) {
            return p.clone();
        }
        let c = &self.resolved.config.corpora;
        match role {
            "startups" => c.resolve(&c.startups),
            "texts" => c.resolve(&c.texts),
            "tweet_stats" => c.resolve(&c.tweet_stats),
            "search_pages" => c.resolve(&c.search_pages),
            "social" => c.resolve(&c.social),
            "audits" => c.resolve(&c.audits),
            "lexicon" => c.resolve(c.lexicon.as_deref().expect("checked by caller")),
            "dialing_codes" => c.resolve(c.dialing_codes.as_deref().expect("checked by caller")),
            "events" => self.out_dir().join(EVENTS_FILE),
            "dataset" => self.out_dir().join(DATASET_FILE),
            "model" => self.out_dir().join(MODEL_FILE),
            other => unreachable!("unknown input role {other}"),
        }
    }

    /// Resolve and check every input before anything is written.
    fn inputs(&self, roles: &[&str], rec: &mut Recorder) -> Result<BTreeMap<String, PathBuf>, CliError> {
        let mut out = BTreeMap::new();
        for role in roles {
            let path = self.input(role);
            if !path.is_file() {
                return Err(CliError::Validation(format!("{role} input {} does not exist", path.display())));
            }
            rec.input(role, &path)?;
            out.insert(role.to_string(), path);
        }
        Ok(out)
    }

    fn optional_roles(&self) -> Vec<&'static str> {
        let c = &self.resolved.config.corpora;
        let mut roles = Vec::new();
        if c.lexicon.is_some() {
            roles.push("lexicon");
        }
        if c.dialing_codes.is_some() {
            roles.push("dialing_codes");
        }
        roles
    }

    fn artifact_path(&self, name: &str) -> PathBuf {
        self.out_dir().join(name)
    }
}

fn load<T: Record>(path: &Path) -> Result<Vec<T>, CliError> {
    Ok(load_corpus::<T>(path).invalid(path.display())?.into_records())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).failed(path.display())?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).failed(path.display())?;
    w.write_all(b"\n").failed(path.display())?;
    w.flush().failed(path.display())
}

fn read_model(path: &Path) -> Result<Model, CliError> {
    Model::from_reader(File::open(path).invalid(path.display())?).invalid(path.display())
}

fn read_data(path: &Path) -> Result<SnapshotDataset, CliError> {
    read_dataset(std::io::BufReader::new(File::open(path).invalid(path.display())?)).invalid(path.display())
}

fn lexicon(inputs: &BTreeMap<String, PathBuf>) -> Result<VerbLexicon, CliError> {
    match inputs.get("lexicon") {
        Some(p) => VerbLexicon::parse(&std::fs::read_to_string(p).invalid(p.display())?).invalid(p.display()),
        None => Ok(VerbLexicon::default()),
    }
}

fn country_table(inputs: &BTreeMap<String, PathBuf>) -> Result<CountryTable, CliError> {
    match inputs.get("dialing_codes") {
        Some(p) => CountryTable::parse(&std::fs::read_to_string(p).invalid(p.display())?).invalid(p.display()),
        None => Ok(CountryTable::default()),
    }
}

fn noise_model(run: &Run, inputs: &BTreeMap<String, PathBuf>) -> Result<Option<NoiseModel>, CliError> {
    let n = &run.resolved.config.noise;
    match n.source {
        NoiseSource::Fixed => Ok(Some(NoiseModel::new(n.alpha, n.beta).invalid("noise")?)),
        NoiseSource::Audit => {
            let audits: Vec<AuditRecord> = load(&inputs["audits"])?;
            Ok(Some(estimate_noise(&audits).invalid("noise audits")?.noise))
        }
        NoiseSource::None => Ok(None),
    }
}

fn noise_roles(run: &Run) -> Vec<&'static str> {
    if run.resolved.config.noise.source == NoiseSource::Audit {
        vec!["audits"]
    } else {
        vec![]
    }
}

fn check_schema(model: &Model, dataset: &SnapshotDataset) -> Result<(), CliError> {
    model.check_schema(&dataset.schema_hash()).map_err(|e| CliError::Validation(e.to_string()))
}

/// Ranking cutoffs larger than the test split are a configuration error.
fn check_k_values(run: &Run, dataset: &SnapshotDataset) -> Result<(), CliError> {
    let n = dataset.test.len();
    match run.resolved.config.metrics.k_values.iter().find(|&&k| k > n) {
        Some(k) => {
            Err(CliError::Validation(format!("metrics.k_values contains {k} but the test split has {n} examples")))
        }
        None => Ok(()),
    }
}

fn ensure_out_dir(run: &Run) -> Result<(), CliError> {
    std::fs::create_dir_all(run.out_dir()).failed(run.out_dir().display())
}

/// Run one command and write its artifacts and manifest.
pub fn execute(cmd: Command, run: &Run) -> Result<Manifest, CliError> {
    let mut rec = Recorder::new(cmd.name());
    let summary = match cmd {
        Command::ExtractEvents => extract(run, &mut rec)?,
        Command::BuildDataset => build(run, &mut rec)?,
        Command::Train => train_cmd(run, &mut rec)?,
        Command::Evaluate => evaluate(run, &mut rec)?,
        Command::Ablate => ablate(run, &mut rec)?,
        Command::Explain => explain(run, &mut rec)?,
        Command::AuditNoise => audit_noise(run, &mut rec)?,
    };
    let manifest = rec.finish(run.resolved, summary);
    manifest.write(&run.artifact_path(&format!("{}.manifest.json", cmd.manifest_stem())))?;
    Ok(manifest)
}

fn extract(run: &Run, rec: &mut Recorder) -> Result<serde_json::Value, CliError> {
    let mut roles = vec!["startups", "texts"];
    roles.extend(run.optional_roles().into_iter().filter(|r| *r == "lexicon"));
    let inputs = run.inputs(&roles, rec)?;
    let startups: Vec<StartupRecord> = load(&inputs["startups"])?;
    let texts: Vec<TextItem> = load(&inputs["texts"])?;
    let lexicon = lexicon(&inputs)?;
    rec.step("load");
    if texts.is_empty() {
        log::warn!("text corpus {} is empty; writing an empty events file", inputs["texts"].display());
    }
    let events = extract_events(&texts, &StartupIndex::build(&startups), &lexicon);
    rec.step("extract");

    ensure_out_dir(run)?;
    let path = run.artifact_path(EVENTS_FILE);
    let mut w = create(&path)?;
    write_corpus(&events, &mut w).failed(path.display())?;
    w.flush().failed(path.display())?;
    rec.artifact("events", &path)?;
    rec.step("write");

    let mut per_year: BTreeMap<i32, usize> = BTreeMap::new();
    for e in &events {
        *per_year.entry(e.date.year()).or_default() += 1;
    }
    let funded: std::collections::BTreeSet<&str> = events.iter().map(|e| e.startup_id.as_str()).collect();
    println!("events: {}", events.len());
    println!("startups with events: {} of {}", funded.len(), startups.len());
    for (year, n) in &per_year {
        println!("  {year}: {n}");
    }
    Ok(json!({
        "texts": texts.len(),
        "startups": startups.len(),
        "events": events.len(),
        "startups_with_events": funded.len(),
        "events_per_year": per_year,
    }))
}

fn build(run: &Run, rec: &mut Recorder) -> Result<serde_json::Value, CliError> {
    let mut roles = vec!["startups", "events", "tweet_stats", "search_pages", "social"];
    roles.extend(run.optional_roles().into_iter().filter(|r| *r == "dialing_codes"));
    let inputs = run.inputs(&roles, rec)?;
    let corpora = Corpora {
        startups: load::<StartupRecord>(&inputs["startups"])?,
        events: load::<FundingEvent>(&inputs["events"])?,
        tweet_stats: load::<TweetStat>(&inputs["tweet_stats"])?,
        search_pages: load::<SearchResultPage>(&inputs["search_pages"])?,
        social: load::<SocialPresence>(&inputs["social"])?,
    };
    let countries = country_table(&inputs)?;
    rec.step("load");
    let dataset = build_dataset_with(&run.resolved.config.dataset, &corpora, &countries).invalid("dataset")?;
    rec.step("featurize");

    ensure_out_dir(run)?;
    let path = run.artifact_path(DATASET_FILE);
    write_dataset(&dataset, create(&path)?).failed(path.display())?;
    rec.artifact("dataset", &path)?;
    rec.step("write");

    println!("{}", dataset.summary());
    println!("schema: {} features, hash {}", dataset.schema.len(), dataset.schema_hash());
    Ok(json!({
        "features": dataset.schema.len(),
        "schema_hash": dataset.schema_hash(),
        "train": dataset.train_counts(),
        "test": dataset.test_counts(),
    }))
}

fn train_cmd(run: &Run, rec: &mut Recorder) -> Result<serde_json::Value, CliError> {
    let inputs = run.inputs(&["dataset"], rec)?;
    let dataset = read_data(&inputs["dataset"])?;
    rec.step("load");
    let cfg = &run.resolved.config;
    let model = train(&cfg.model.train_config(), &dataset.schema, &dataset.train, cfg.seed())
        .map_err(|e| training_error("training", e.into()))?;
    rec.step("train");

    ensure_out_dir(run)?;
    let path = run.artifact_path(MODEL_FILE);
    let mut w = create(&path)?;
    model.to_writer(&mut w).failed(path.display())?;
    w.write_all(b"\n").failed(path.display())?;
    w.flush().failed(path.display())?;
    rec.artifact("model", &path)?;
    rec.step("write");

    println!("trained {} on {} examples ({} features)", model.kind.name(), dataset.train.len(), model.n_features);
    Ok(json!({
        "kind": model.kind,
        "schema_hash": model.schema_hash,
        "train_examples": dataset.train.len(),
    }))
}

fn evaluate(run: &Run, rec: &mut Recorder) -> Result<serde_json::Value, CliError> {
    let mut roles = vec!["dataset", "model"];
    roles.extend(noise_roles(run));
    let inputs = run.inputs(&roles, rec)?;
    let dataset = read_data(&inputs["dataset"])?;
    let model = read_model(&inputs["model"])?;
    check_schema(&model, &dataset)?;
    check_k_values(run, &dataset)?;
    let noise = noise_model(run, &inputs)?;
    rec.step("load");
    let report = evaluate_model(&model, &dataset, &run.resolved.config.metric_config(noise)).failed("evaluation")?;
    rec.step("evaluate");

    ensure_out_dir(run)?;
    let path = run.artifact_path("report.json");
    write_json(&path, &report)?;
    rec.artifact("report", &path)?;
    let countries = run.artifact_path("countries.csv");
    write_country_csv(&country_counts(&dataset), create(&countries)?).failed(countries.display())?;
    rec.artifact("countries", &countries)?;
    rec.step("write");

    for a in &report.at_k {
        println!("P@{}: {:.4}  F{}@{}: {:.4}", a.k, a.precision, report.f_beta, a.k, a.f_beta);
    }
    println!("AUC: {:.4}", report.auc_raw);
    if let Some(c) = report.auc_corrected {
        println!("corrected AUC: {c:.4}{}", if report.auc_corrected_clamped { " (clamped)" } else { "" });
    }
    Ok(json!({ "auc_raw": report.auc_raw, "auc_corrected": report.auc_corrected }))
}

fn ablate(run: &Run, rec: &mut Recorder) -> Result<serde_json::Value, CliError> {
    let mut roles = vec!["dataset"];
    roles.extend(noise_roles(run));
    let inputs = run.inputs(&roles, rec)?;
    let dataset = read_data(&inputs["dataset"])?;
    check_k_values(run, &dataset)?;
    let noise = noise_model(run, &inputs)?;
    rec.step("load");
    let cfg = &run.resolved.config;
    let rows = ablate_groups(&dataset, &cfg.model.train_config(), cfg.seed(), &cfg.metric_config(noise))
        .map_err(|e| training_error("ablation", e))?;
    rec.step("ablate");

    ensure_out_dir(run)?;
    let csv = run.artifact_path("ablation.csv");
    write_ablation_csv(&rows, create(&csv)?).failed(csv.display())?;
    rec.artifact("ablation_csv", &csv)?;
    let path = run.artifact_path("ablation.json");
    write_json(&path, &rows)?;
    rec.artifact("ablation", &path)?;
    rec.step("write");

    for r in &rows {
        println!("{:<14} features {:>5}  AUC {:.4}", r.name, r.n_features, r.report.auc_raw);
    }
    Ok(json!({ "rows": rows.len() }))
}

#[derive(Serialize)]
struct ExplainedExample<'a> {
    startup_id: &'a str,
    cutoff: chrono::NaiveDate,
    score: f64,
    base: f64,
    sum_std_error: f64,
    attributions: &'a [f64],
}

#[derive(Serialize)]
struct ExplainOutput<'a> {
    model_kind: &'a str,
    schema_hash: String,
    features: Vec<&'a str>,
    examples: Vec<ExplainedExample<'a>>,
}

fn explain(run: &Run, rec: &mut Recorder) -> Result<serde_json::Value, CliError> {
    let inputs = run.inputs(&["dataset", "model"], rec)?;
    let dataset = read_data(&inputs["dataset"])?;
    let model = read_model(&inputs["model"])?;
    check_schema(&model, &dataset)?;
    if dataset.test.is_empty() || dataset.train.is_empty() {
        return Err(CliError::Validation("explain needs non-empty train and test splits".into()));
    }
    rec.step("load");
    let cfg = &run.resolved.config;
    let shap = cfg.shapley_config();
    let scores = predict(&model, &dataset.schema, &dataset.test).failed("scoring")?;
    let top: Vec<usize> = ranking(&scores).into_iter().take(cfg.explain.top).collect();
    let stride = (dataset.train.len() / shap.background_rows).max(1);
    let background: Vec<Vec<f64>> =
        dataset.train.iter().step_by(stride).take(shap.background_rows).map(|e| e.features.clone()).collect();
    let explained: Vec<Vec<f64>> = top.iter().map(|&i| dataset.test[i].features.clone()).collect();
    let attrs = explain_examples(&model, &explained, &background, &shap).failed("attribution")?;
    let names: Vec<String> = dataset.schema.names().into_iter().map(String::from).collect();
    let summary = summarize_attributions(&attrs, &explained, &names);
    rec.step("explain");

    ensure_out_dir(run)?;
    let output = ExplainOutput {
        model_kind: model.kind.name(),
        schema_hash: model.schema_hash.clone(),
        features: dataset.schema.names(),
        examples: top
            .iter()
            .zip(&attrs)
            .map(|(&i, a)| ExplainedExample {
                startup_id: &dataset.test[i].startup_id,
                cutoff: dataset.test[i].cutoff,
                score: model.score(&dataset.test[i].features),
                base: a.base,
                sum_std_error: a.sum_std_error,
                attributions: &a.values,
            })
            .collect(),
    };
    let path = run.artifact_path("attributions.json");
    write_json(&path, &output)?;
    rec.artifact("attributions", &path)?;
    let swarm = run.artifact_path("beeswarm.csv");
    write_beeswarm_csv(&summary, create(&swarm)?).failed(swarm.display())?;
    rec.artifact("beeswarm", &swarm)?;
    let imp = run.artifact_path("importance.csv");
    let mut w = create(&imp)?;
    writeln!(w, "feature,importance").failed(imp.display())?;
    for (name, v) in &summary.ranking {
        writeln!(w, "{name},{v}").failed(imp.display())?;
    }
    w.flush().failed(imp.display())?;
    rec.artifact("importance", &imp)?;
    rec.step("write");

    if summary.all_zero {
        log::warn!("every attribution is zero");
    }
    for (name, v) in summary.ranking.iter().take(10) {
        println!("{name:<40} {v:.4}");
    }
    Ok(json!({ "examples": attrs.len(), "all_zero": summary.all_zero }))
}

fn audit_noise(run: &Run, rec: &mut Recorder) -> Result<serde_json::Value, CliError> {
    let inputs = run.inputs(&["audits"], rec)?;
    let audits: Vec<AuditRecord> = load(&inputs["audits"])?;
    rec.step("load");
    let est = estimate_noise(&audits).invalid("noise audits")?;

    ensure_out_dir(run)?;
    let path = run.artifact_path("noise.json");
    write_json(&path, &est)?;
    rec.artifact("noise", &path)?;
    rec.step("write");

    println!(
        "beta: {:.4} ({} false of {} labeled positives), 95% CI [{:.4}, {:.4}]",
        est.noise.beta, est.false_positives, est.positives_audited, est.beta_ci95.0, est.beta_ci95.1
    );
    println!(
        "alpha: {:.4} ({} hidden of {} unlabeled), 95% CI [{:.4}, {:.4}]",
        est.noise.alpha, est.hidden_positives, est.unlabeled_audited, est.alpha_ci95.0, est.alpha_ci95.1
    );
    Ok(json!({ "alpha": est.noise.alpha, "beta": est.noise.beta }))
}
