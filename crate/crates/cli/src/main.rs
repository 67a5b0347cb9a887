//! `fundcast`: extract funding events, build snapshot datasets, train,
//! evaluate, ablate and explain funding predictors.

mod commands;
mod config;
mod error;
mod manifest;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fundcast_core::synth::{generate, SynthConfig};

use commands::{execute, Command, Run};
use config::{resolve, Resolved, CONFIG_ENV};
use error::{Classify, CliError};
use manifest::Manifest;

#[derive(Parser)]
#[command(name = "fundcast", version, about = "Startup funding prediction pipeline")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct GlobalArgs {
    /// TOML config file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set model.gbdt.n_trees=500`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Master seed (same as `--set seed=N`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (same as `--set output_dir=DIR`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Detect funding events in the text corpus.
    ExtractEvents,
    /// Build the temporal train/test snapshot dataset.
    BuildDataset {
        /// Events file; defaults to the one in the output directory.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Train the configured model kind on the train split.
    Train {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Score the test split and report ranking metrics.
    Evaluate {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Retrain without each feature group in turn.
    Ablate {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Shapley attributions for the highest-scored test examples.
    Explain {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Estimate label-noise rates from the audit corpus.
    AuditNoise,
    /// Re-run the command recorded in a manifest and compare artifact hashes.
    Rerun { manifest: PathBuf },
    /// Write a synthetic corpus with planted funding signal.
    Synth {
        #[arg(long, default_value_t = 500)]
        startups: usize,
    },
}

impl GlobalArgs {
    fn overrides(&self) -> Vec<String> {
        let mut out = self.set.clone();
        if let Some(s) = self.seed {
            out.push(format!("seed={s}"));
        }
        if let Some(w) = self.workers {
            out.push(format!("workers={w}"));
        }
        if let Some(d) = &self.out_dir {
            out.push(format!("output_dir={}", toml_string(&d.display().to_string())));
        }
        out
    }
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.into()).to_string()
}

fn set_workers(n: usize) {
    // a second call in the same process keeps the first pool, which is harmless
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
}

fn explicit(pairs: &[(&str, &Option<PathBuf>)]) -> BTreeMap<String, PathBuf> {
    pairs.iter().filter_map(|(role, p)| p.as_ref().map(|p| (role.to_string(), p.clone()))).collect()
}

fn run_command(cmd: Command, resolved: &Resolved, explicit: BTreeMap<String, PathBuf>) -> Result<(), CliError> {
    set_workers(resolved.config.workers);
    execute(cmd, &Run { resolved, explicit })?;
    Ok(())
}

fn rerun(path: &std::path::Path, out_dir: Option<PathBuf>, workers: Option<usize>) -> Result<(), CliError> {
    let m = Manifest::read(path)?;
    let cmd = Command::parse(&m.command)
        .ok_or_else(|| CliError::Validation(format!("{}: unknown command {:?}", path.display(), m.command)))?;
    let mut config = m.config.clone();
    if let Some(d) = out_dir {
        config.output_dir = d;
    }
    if let Some(w) = workers {
        config.workers = w;
    }
    config.validate()?;
    for (role, f) in &m.inputs {
        let now = fundcast_core::hashing::file_sha256(&f.path).invalid(f.path.display())?;
        if now != f.sha256 {
            return Err(CliError::Validation(format!(
                "{role} input {} changed since the manifest was written ({} now, {} recorded)",
                f.path.display(),
                now,
                f.sha256
            )));
        }
    }
    let resolved = Resolved {
        config,
        file: m.config_file.clone(),
        overrides: m.overrides.clone(),
        sources: m.key_sources.clone(),
    };
    let inputs = m.inputs.iter().map(|(role, f)| (role.clone(), f.path.clone())).collect();
    set_workers(resolved.config.workers);
    let fresh = execute(cmd, &Run { resolved: &resolved, explicit: inputs })?;
    let mut differ = Vec::new();
    for (role, f) in &m.artifacts {
        match fresh.artifacts.get(role) {
            Some(g) if g.sha256 == f.sha256 => println!("{role}: identical ({})", g.path.display()),
            _ => differ.push(role.clone()),
        }
    }
    if differ.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!("regenerated artifacts differ: {}", differ.join(", "))))
    }
}

fn synth(n_startups: usize, g: &GlobalArgs) -> Result<(), CliError> {
    let dir = g.out_dir.clone().unwrap_or_else(|| PathBuf::from("corpus"));
    let cfg = SynthConfig { n_startups, seed: g.seed.unwrap_or(SynthConfig::default().seed), ..SynthConfig::default() };
    if n_startups == 0 {
        return Err(CliError::Validation("--startups must be positive".into()));
    }
    set_workers(g.workers.unwrap_or(0));
    let corpus = generate(&cfg);
    corpus.write_to_dir(&dir).failed(dir.display())?;
    println!(
        "wrote {} startups, {} texts and {} audits to {} ({} planted rounds)",
        corpus.startups.len(),
        corpus.texts.len(),
        corpus.audits.len(),
        dir.display(),
        corpus.planted.len()
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    let config = || resolve(g.config.as_deref(), &g.overrides());
    match &cli.command {
        Cmd::ExtractEvents => run_command(Command::ExtractEvents, &config()?, BTreeMap::new()),
        Cmd::BuildDataset { events } => run_command(Command::BuildDataset, &config()?, explicit(&[("events", events)])),
        Cmd::Train { dataset } => run_command(Command::Train, &config()?, explicit(&[("dataset", dataset)])),
        Cmd::Evaluate { dataset, model } => {
            run_command(Command::Evaluate, &config()?, explicit(&[("dataset", dataset), ("model", model)]))
        }
        Cmd::Ablate { dataset } => run_command(Command::Ablate, &config()?, explicit(&[("dataset", dataset)])),
        Cmd::Explain { dataset, model } => {
            run_command(Command::Explain, &config()?, explicit(&[("dataset", dataset), ("model", model)]))
        }
        Cmd::AuditNoise => run_command(Command::AuditNoise, &config()?, BTreeMap::new()),
        Cmd::Rerun { manifest } => rerun(manifest, g.out_dir.clone(), g.workers),
        Cmd::Synth { startups } => synth(*startups, g),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = if cli.global.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn };
    env_logger::Builder::new().filter_level(level).parse_default_env().format_timestamp(None).init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
