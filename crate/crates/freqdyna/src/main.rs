use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use freqdyna::config::{parse_seeds, Agent, EnvName, ExperimentConfig, ExperimentKind, Model, RegressBias};
use freqdyna::formats::{read_eval_curve, read_learning_curve, read_queue_snapshot};
use freqdyna::harness::{run_experiment, write_json};
use freqdyna::stats::{curve_aggregate, queue_ball_fraction};
use freqdyna::HarnessError;
use freqdyna_core::envmodel::MAZE_HOLE_CENTERS;
use serde_json::json;

#[derive(Parser)]
#[command(name = "freqdyna", version, about = "Frequency-based search-control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the spectral identity checks and write a JSON report.
    Verify(ExperimentArgs),
    /// Train regressors on biased datasets and write learning curves.
    Regress(ExperimentArgs),
    /// Train agents and write metric logs, queue snapshots and an aggregate.
    Rl(ExperimentArgs),
    /// Statistics over existing output files.
    Stats(StatsArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    exp: Option<ExperimentKind>,
    #[arg(long, value_enum)]
    env: Option<EnvName>,
    #[arg(long, value_enum)]
    agent: Option<Agent>,
    #[arg(long, value_enum)]
    model: Option<Model>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    /// `0..10`, `1,4,9` or a single seed.
    #[arg(long, value_parser = |s: &str| parse_seeds(s).map(SeedList))]
    seeds: Option<SeedList>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    warmup: Option<u64>,
    /// Environment steps at which to dump the search-control queue.
    #[arg(long, value_delimiter = ',')]
    snapshot_steps: Option<Vec<u64>>,
    #[arg(long, value_enum)]
    bias: Option<RegressBias>,
    #[arg(long)]
    p_b: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone)]
struct SeedList(Vec<u64>);

impl ExperimentArgs {
    fn resolve(self, kind: ExperimentKind) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig { exp: kind, ..Default::default() },
        };
        if let Some(exp) = self.exp {
            cfg.exp = exp;
        }
        if cfg.exp != kind {
            bail!("configuration is for {:?} but the subcommand runs {:?}", cfg.exp, kind);
        }
        macro_rules! set {
            ($($field:ident),*) => {$(if let Some(v) = self.$field { cfg.$field = v; })*};
        }
        if let Some(SeedList(seeds)) = self.seeds {
            cfg.seeds = seeds;
        }
        set!(env, agent, model, d, sigma, p, m, beta, steps, warmup, snapshot_steps, bias, p_b, out);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct StatsArgs {
    /// Queue snapshot CSVs; reports the fraction of states near the maze holes.
    #[arg(long, num_args = 1..)]
    queue: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    radius: f64,
    /// Metric or learning-curve CSVs to average per step.
    #[arg(long, num_args = 1..)]
    curves: Vec<PathBuf>,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_any_curve(path: &std::path::Path) -> freqdyna::Result<Vec<(u64, f64)>> {
    match read_eval_curve(path) {
        Err(HarnessError::Format { .. }) => read_learning_curve(path),
        other => other,
    }
}

fn stats(args: StatsArgs) -> anyhow::Result<()> {
    if args.queue.is_empty() && args.curves.is_empty() {
        bail!("nothing to do: pass --queue and/or --curves");
    }
    let mut out = serde_json::Map::new();
    if !args.queue.is_empty() {
        let mut fractions = Vec::new();
        for path in &args.queue {
            let states = read_queue_snapshot(path)?;
            let f = queue_ball_fraction(&states, &MAZE_HOLE_CENTERS, args.radius)
                .with_context(|| path.display().to_string())?;
            fractions.push(json!({ "file": path.display().to_string(), "states": states.len(), "fraction": f }));
        }
        out.insert("radius".into(), json!(args.radius));
        out.insert("queue_ball_fraction".into(), json!(fractions));
    }
    if !args.curves.is_empty() {
        let runs = args
            .curves
            .iter()
            .map(|p| Ok((p.display().to_string(), read_any_curve(p)?)))
            .collect::<freqdyna::Result<Vec<_>>>()?;
        out.insert("curve_aggregate".into(), json!(curve_aggregate(&runs)?));
    }
    match args.out {
        Some(path) => write_json(&path, &out)?,
        None => println!("{}", serde_json::to_string_pretty(&out)?),
    }
    Ok(())
}

fn experiment(args: ExperimentArgs, kind: ExperimentKind) -> anyhow::Result<bool> {
    let cfg = args.resolve(kind)?;
    let outcome = run_experiment(&cfg)?;
    let mut ok = true;
    for r in &outcome.records {
        let label = match cfg.exp {
            ExperimentKind::SpectralVerify => "verify".to_string(),
            _ => format!("seed {}", r.seed),
        };
        match &r.status {
            freqdyna::harness::RunStatus::Completed => {
                println!("{label}: {} ({:.1} s)", r.metric_path.display(), r.duration.as_secs_f64())
            }
            freqdyna::harness::RunStatus::Failed(why) => {
                ok = false;
                eprintln!("{label}: failed: {why}");
            }
        }
    }
    if let Some(p) = outcome.aggregate_path {
        println!("aggregate: {}", p.display());
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(a) => experiment(a, ExperimentKind::SpectralVerify),
        Command::Regress(a) => experiment(a, ExperimentKind::Regress),
        Command::Rl(a) => experiment(a, ExperimentKind::Rl),
        Command::Stats(a) => stats(a).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
