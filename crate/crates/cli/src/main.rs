use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use srl_core::env::EnvKind;
use srl_core::harness::{
    self, dispatch, emit_results, Algorithm, Checkpoint, Evaluate, ExperimentConfig, GenerateData, RunReport, RunStatus,
};

#[derive(Parser)]
#[command(name = "srl", version, about = "Structured reinforcement learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write train/val/test instance datasets as JSONL.
    GenData(Common),
    /// Train every configured seed (or just --seed) and write results.
    Train(Common),
    /// Evaluate a checkpoint or a reference policy on the train and test splits.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Actor checkpoint produced by `train`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Summarize every run under --out into summary.csv.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Run only this seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured environment.
    #[arg(long)]
    env: Option<EnvKind>,
    /// Override the configured algorithm.
    #[arg(long)]
    algo: Option<Algorithm>,
}

impl Common {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg =
            ExperimentConfig::load(&self.config).with_context(|| format!("loading {}", self.config.display()))?;
        if let Some(e) = self.env {
            cfg.environment = e;
        }
        if let Some(a) = self.algo {
            cfg.algorithm = a;
        }
        if let Some(s) = self.seed {
            cfg.seeds = vec![s];
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed-{seed}"))
}

fn train(common: &Common) -> anyhow::Result<bool> {
    let cfg = common.load()?;
    std::fs::create_dir_all(&common.out)?;
    std::fs::write(common.out.join("config.toml"), cfg.emit())?;
    let mut all_ok = true;
    for &seed in &cfg.seeds {
        let outcome = harness::run(&cfg, seed)?;
        let dir = seed_dir(&common.out, seed);
        emit_results(&outcome.report, &dir)?;
        if let (Some(actor), Some(ep)) = (&outcome.actor, outcome.report.best_episode) {
            Checkpoint::new(&actor.model, &outcome.report.config_hash, ep).save(&dir.join("checkpoint.json"))?;
        }
        print_run(&outcome.report);
        if outcome.report.status == RunStatus::Failed {
            all_ok = false;
        }
    }
    Ok(all_ok)
}

fn print_run(r: &RunReport) {
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    match &r.error {
        Some(e) => println!("{} {} seed {}: failed: {e}", r.environment, r.algorithm, r.seed),
        None => println!(
            "{} {} seed {}: train {} test {} ({:.1} s)",
            r.environment,
            r.algorithm,
            r.seed,
            fmt(r.train_mean),
            fmt(r.test_mean),
            r.wall_clock_secs
        ),
    }
}

fn evaluate(common: &Common, checkpoint: Option<&Path>) -> anyhow::Result<()> {
    let cfg = common.load()?;
    let checkpoint = checkpoint
        .map(|p| Checkpoint::load(p).with_context(|| format!("loading {}", p.display())))
        .transpose()?;
    let seed = cfg.seeds[0];
    let report = dispatch(&cfg, Evaluate { seed, checkpoint })?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    emit_results(&report, &common.out)?;
    print_run(&report);
    Ok(())
}

fn find_reports(dir: &Path, out: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.path());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            find_reports(&p, out)?;
        } else if p.file_name().is_some_and(|n| n == "report.json") {
            out.push(p);
        }
    }
    Ok(())
}

fn report(out: &Path) -> anyhow::Result<()> {
    let mut paths = Vec::new();
    find_reports(out, &mut paths)?;
    if paths.is_empty() {
        bail!("no report.json files under {}", out.display());
    }
    let mut w =
        String::from("environment,algorithm,seed,status,best_episode,train_mean,test_mean,test_delta_vs_greedy\n");
    for p in &paths {
        let r: RunReport =
            serde_json::from_str(&std::fs::read_to_string(p)?).with_context(|| format!("reading {}", p.display()))?;
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        let tests: Vec<f64> = r
            .finals
            .iter()
            .filter(|f| f.split == harness::Split::Test)
            .map(|f| f.delta_vs_greedy)
            .collect();
        let delta = (!tests.is_empty()).then(|| tests.iter().sum::<f64>() / tests.len() as f64);
        w.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.environment,
            r.algorithm,
            r.seed,
            if r.status == RunStatus::Ok { "ok" } else { "failed" },
            r.best_episode.map_or_else(String::new, |e| e.to_string()),
            opt(r.train_mean),
            opt(r.test_mean),
            opt(delta)
        ));
    }
    std::fs::write(out.join("summary.csv"), &w)?;
    print!("{w}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::GenData(c) => c.load().and_then(|cfg| {
            dispatch(&cfg, GenerateData { dir: &c.out })?;
            println!("wrote datasets to {}", c.out.display());
            Ok(true)
        }),
        Command::Train(c) => train(c),
        Command::Evaluate { common, checkpoint } => evaluate(common, checkpoint.as_deref()).map(|_| true),
        Command::Report { out } => report(out).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
