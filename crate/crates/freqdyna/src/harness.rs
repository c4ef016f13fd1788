//! Runs every seed of an experiment, writes per-run files, and aggregates
//! from those files.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use freqdyna_core::agents::{run_agent, RunLog};
use freqdyna_core::envmodel::{Maze, MountainCar};
use freqdyna_core::rng::{stream, Stream};
use freqdyna_core::supervised::{
    gen_derivative_biased, gen_region_biased, gen_uniform, run_regression, DerivativeMode, RegressionConfig,
    RegressionDataset, NOISE_STD,
};
use serde::{Deserialize, Serialize};

use crate::config::{EnvName, ExperimentConfig, ExperimentKind, RegressBias};
use crate::error::{io_err, HarnessError, Result};
use crate::formats::{
    read_eval_curve, read_learning_curve, write_learning_curve, write_metrics, write_params_bin, write_queue_snapshot,
};
use crate::stats::{curve_aggregate, mean_stderr, Bucket};
use crate::verify::{run_suite, VerifyOptions};

/// Evaluation points averaged into a run's final return (2 × 5 episodes).
pub const FINAL_EVAL_POINTS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub metric_path: PathBuf,
    pub status: RunStatus,
    pub duration: Duration,
}

impl RunRecord {
    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalSummary {
    pub mean: f64,
    pub stderr: f64,
    pub per_run: Vec<f64>,
}

/// Experiment-level summary; contains no timestamps so reruns reproduce it
/// byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub config_hash: String,
    pub config: serde_json::Value,
    /// `eval_return` for RL runs, `test_rmse` for regression runs.
    pub metric: String,
    pub runs: Vec<String>,
    pub buckets: Vec<Bucket>,
    #[serde(rename = "final")]
    pub final_value: FinalSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub records: Vec<RunRecord>,
    pub aggregate_path: Option<PathBuf>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    match cfg.exp {
        ExperimentKind::SpectralVerify => run_verify(cfg),
        ExperimentKind::Regress | ExperimentKind::Rl => run_seeds(cfg),
    }
}

fn run_verify(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let start = Instant::now();
    let path = cfg.out.join(format!("{}.json", cfg.aggregate_stem()));
    let status = match run_suite(&VerifyOptions::default()) {
        Ok(report) => {
            write_json(&path, &report)?;
            if report.pass {
                RunStatus::Completed
            } else {
                RunStatus::Failed("some identities are outside tolerance".into())
            }
        }
        Err(e) => RunStatus::Failed(e.to_string()),
    };
    let record = RunRecord { config_hash: cfg.hash(), seed: 0, metric_path: path, status, duration: start.elapsed() };
    Ok(ExperimentOutcome { records: vec![record], aggregate_path: None })
}

fn run_seeds(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let hash = cfg.hash();
    let mut records = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let start = Instant::now();
        let stem = cfg.run_stem(seed);
        let metric_path = cfg.out.join(format!("{stem}.csv"));
        let result = match cfg.exp {
            ExperimentKind::Rl => run_rl_seed(cfg, seed, &stem, &metric_path),
            _ => run_regress_seed(cfg, seed, &metric_path),
        };
        let status = match result {
            Ok(()) => RunStatus::Completed,
            Err(e) => RunStatus::Failed(e.to_string()),
        };
        records.push(RunRecord { config_hash: hash.clone(), seed, metric_path, status, duration: start.elapsed() });
    }
    let done: Vec<&RunRecord> = records.iter().filter(|r| r.completed()).collect();
    if done.is_empty() {
        return Ok(ExperimentOutcome { records, aggregate_path: None });
    }
    let paths: Vec<PathBuf> = done.iter().map(|r| r.metric_path.clone()).collect();
    let aggregate = match cfg.exp {
        ExperimentKind::Rl => aggregate_rl(cfg, &paths)?,
        _ => aggregate_regress(cfg, &paths)?,
    };
    let path = cfg.out.join(format!("{}_aggregate.json", cfg.aggregate_stem()));
    write_json(&path, &aggregate)?;
    Ok(ExperimentOutcome { records, aggregate_path: Some(path) })
}

fn run_rl_seed(cfg: &ExperimentConfig, seed: u64, stem: &str, metric_path: &Path) -> Result<()> {
    let agent_cfg = cfg.agent_config();
    let log: RunLog = match cfg.env {
        EnvName::MountainCar => {
            run_agent(cfg.agent.into(), &MountainCar::new(cfg.sigma), cfg.model.into(), &agent_cfg, seed, cfg.steps)?
        }
        EnvName::Maze => run_agent(cfg.agent.into(), &Maze::new(), cfg.model.into(), &agent_cfg, seed, cfg.steps)?,
    };
    write_metrics(metric_path, &log.rows)?;
    for snap in &log.snapshots {
        let path = cfg.out.join(format!("{stem}_queue_step{}.csv", snap.env_step));
        write_queue_snapshot(&path, cfg.env.state_labels(), &snap.states)?;
    }
    if let Some(net) = &log.qnet {
        write_params_bin(&cfg.out.join(format!("{stem}_qnet.bin")), net)?;
    }
    Ok(())
}

/// The datasets of one regression seed: all sets for a seed come from its
/// data stream, so `bias` alone changes between compared configurations.
pub fn regression_data(cfg: &ExperimentConfig, seed: u64) -> Result<(RegressionDataset, RegressionDataset)> {
    let mut rng = stream(seed, Stream::Data);
    let test = gen_uniform(cfg.test_size, 0.0, &mut rng)?;
    let train = match cfg.bias {
        RegressBias::Unbiased => gen_uniform(cfg.train_size, NOISE_STD, &mut rng)?,
        RegressBias::High => gen_region_biased(cfg.train_size, cfg.p_b, &mut rng)?,
        RegressBias::GradNorm => gen_derivative_biased(cfg.train_size, DerivativeMode::Gradient, &mut rng)?,
        RegressBias::HessianNorm => gen_derivative_biased(cfg.train_size, DerivativeMode::Hessian, &mut rng)?,
    };
    Ok((train, test))
}

fn run_regress_seed(cfg: &ExperimentConfig, seed: u64, metric_path: &Path) -> Result<()> {
    let (train, test) = regression_data(cfg, seed)?;
    let rcfg = RegressionConfig { iterations: cfg.steps as usize, ..Default::default() };
    let curve = run_regression(&train, &test, &rcfg, seed)?;
    write_learning_curve(metric_path, &curve)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn config_value(cfg: &ExperimentConfig) -> serde_json::Value {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    if let Some(map) = v.as_object_mut() {
        map.remove("out");
    }
    v
}

fn summarize(per_run: Vec<f64>) -> FinalSummary {
    let (mean, stderr) = mean_stderr(&per_run);
    FinalSummary { mean, stderr, per_run }
}

fn aggregate_rl(cfg: &ExperimentConfig, paths: &[PathBuf]) -> Result<Aggregate> {
    let curves = paths.iter().map(|p| Ok((file_name(p), read_eval_curve(p)?))).collect::<Result<Vec<_>>>()?;
    let per_run = curves
        .iter()
        .map(|(name, c)| {
            if c.is_empty() {
                return Err(HarnessError::Empty(format!("{name} has no evaluation points")));
            }
            let tail = &c[c.len().saturating_sub(FINAL_EVAL_POINTS)..];
            Ok(tail.iter().map(|x| x.1).sum::<f64>() / tail.len() as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Aggregate {
        config_hash: cfg.hash(),
        config: config_value(cfg),
        metric: "eval_return".into(),
        runs: curves.iter().map(|c| c.0.clone()).collect(),
        buckets: curve_aggregate(&curves)?,
        final_value: summarize(per_run),
    })
}

fn aggregate_regress(cfg: &ExperimentConfig, paths: &[PathBuf]) -> Result<Aggregate> {
    let curves = paths.iter().map(|p| Ok((file_name(p), read_learning_curve(p)?))).collect::<Result<Vec<_>>>()?;
    let per_run = curves.iter().map(|(_, c)| c.last().map(|x| x.1).unwrap_or(f64::NAN)).collect();
    Ok(Aggregate {
        config_hash: cfg.hash(),
        config: config_value(cfg),
        metric: "test_rmse".into(),
        runs: curves.iter().map(|c| c.0.clone()).collect(),
        buckets: curve_aggregate(&curves)?,
        final_value: summarize(per_run),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|source| HarnessError::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn read_aggregate(path: &Path) -> Result<Aggregate> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json { path: path.to_path_buf(), source })
}
