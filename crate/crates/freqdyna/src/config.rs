//! Experiment configuration: a JSON file with CLI overrides, validated before
//! any run starts.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use freqdyna_core::agents::{AgentConfig, AgentVariant, ModelKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SpectralVerify,
    Regress,
    Rl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EnvName {
    MountainCar,
    Maze,
}

impl EnvName {
    pub fn name(self) -> &'static str {
        match self {
            EnvName::MountainCar => "mountain-car",
            EnvName::Maze => "maze",
        }
    }

    /// Column labels for queue snapshot files.
    pub fn state_labels(self) -> &'static [&'static str] {
        match self {
            EnvName::MountainCar => &["position", "velocity"],
            EnvName::Maze => &["x", "y"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Agent {
    Er,
    PrioritizedEr,
    DynaValue,
    DynaFrequency,
    DynaGradnorm,
    DynaHessnorm,
}

impl From<Agent> for AgentVariant {
    fn from(a: Agent) -> Self {
        match a {
            Agent::Er => AgentVariant::Er,
            Agent::PrioritizedEr => AgentVariant::PrioritizedEr,
            Agent::DynaValue => AgentVariant::DynaValue,
            Agent::DynaFrequency => AgentVariant::DynaFrequency,
            Agent::DynaGradnorm => AgentVariant::DynaGradNorm,
            Agent::DynaHessnorm => AgentVariant::DynaHessNorm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    True,
    Learned,
}

impl From<Model> for ModelKind {
    fn from(m: Model) -> Self {
        match m {
            Model::True => ModelKind::True,
            Model::Learned => ModelKind::Learned,
        }
    }
}

/// Training-set construction for `regress` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RegressBias {
    Unbiased,
    /// `p_b` of the inputs from the fast branch `[-2, 0)`.
    High,
    GradNorm,
    HessianNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub exp: ExperimentKind,
    pub env: EnvName,
    pub agent: Agent,
    pub model: Model,
    /// Planning updates per environment step.
    pub d: usize,
    /// Reward-noise standard deviation (MountainCar only).
    pub sigma: f64,
    /// Probability of the frequency rule when choosing a climb start.
    pub p: f64,
    /// Accepted states per climb.
    pub m: usize,
    pub beta: f64,
    pub seeds: Vec<u64>,
    /// Environment steps (`rl`) or training iterations (`regress`).
    pub steps: u64,
    /// Random-action steps before the first update.
    pub warmup: u64,
    pub snapshot_steps: Vec<u64>,
    pub bias: RegressBias,
    pub p_b: f64,
    pub train_size: usize,
    pub test_size: usize,
    /// Output directory. Not part of the configuration hash.
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            exp: ExperimentKind::Rl,
            env: EnvName::MountainCar,
            agent: Agent::DynaFrequency,
            model: Model::True,
            d: 10,
            sigma: 0.0,
            p: 0.5,
            m: 20,
            beta: 0.5,
            seeds: vec![0],
            steps: 30_000,
            warmup: 5000,
            snapshot_steps: Vec::new(),
            bias: RegressBias::Unbiased,
            p_b: 0.8,
            train_size: 4000,
            test_size: 2000,
            out: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|source| HarnessError::Json { path: path.to_path_buf(), source })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(HarnessError::Config(msg.to_string()));
        if self.d == 0 {
            return bad("d must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad("beta must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad("p must lie in [0, 1]");
        }
        if self.m == 0 {
            return bad("m must be at least 1");
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.p_b) {
            return bad("p_b must lie in [0, 1]");
        }
        if self.train_size == 0 || self.test_size == 0 {
            return bad("dataset sizes must be positive");
        }
        let mut seen = std::collections::BTreeSet::new();
        if !self.seeds.iter().all(|s| seen.insert(*s)) {
            return bad("seeds must be distinct");
        }
        if let Some(&t) = self.snapshot_steps.iter().find(|&&t| t == 0 || t > self.steps) {
            return Err(HarnessError::Config(format!("snapshot step {t} is outside 1..={}", self.steps)));
        }
        if self.exp == ExperimentKind::Rl {
            self.agent_config().validate()?;
        }
        Ok(())
    }

    /// Agent settings: the environment's defaults with this config's
    /// overrides applied.
    pub fn agent_config(&self) -> AgentConfig {
        let mut cfg = match self.env {
            EnvName::MountainCar => AgentConfig::mountain_car(),
            EnvName::Maze => AgentConfig::maze(),
        };
        cfg.planning_steps = self.d;
        cfg.warmup = self.warmup;
        cfg.beta = self.beta;
        cfg.hill.p = self.p;
        cfg.hill.m = self.m;
        cfg.snapshot_steps = self.snapshot_steps.clone();
        cfg
    }

    /// SHA-256 of the canonical JSON form (keys sorted, `out` removed).
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("out");
        }
        let canonical = serde_json::to_string(&value).expect("value serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// File stem shared by everything one seed writes.
    pub fn run_stem(&self, seed: u64) -> String {
        self.stem(Some(seed))
    }

    /// File stem of the experiment-level outputs.
    pub fn aggregate_stem(&self) -> String {
        self.stem(None)
    }

    fn stem(&self, seed: Option<u64>) -> String {
        let hash = &self.hash()[..12];
        let seed = seed.map(|s| format!("_seed{s}")).unwrap_or_default();
        match self.exp {
            ExperimentKind::Rl => format!(
                "{}_{}_{}_d{}_sigma{}{seed}_{hash}",
                AgentVariant::from(self.agent).name(),
                self.env.name(),
                ModelKind::from(self.model).name(),
                self.d,
                self.sigma,
            ),
            ExperimentKind::Regress => {
                let bias = match self.bias {
                    RegressBias::High => format!("high{}", self.p_b),
                    other => other.to_possible_value().expect("no skipped variants").get_name().to_string(),
                };
                format!("regress_{bias}{seed}_{hash}")
            }
            ExperimentKind::SpectralVerify => format!("verify_{hash}"),
        }
    }
}

/// Parses `3`, `0,2,5` or `0..10` (half-open).
pub fn parse_seeds(text: &str) -> std::result::Result<Vec<u64>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("bad seed range start: {e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("bad seed range end: {e}"))?;
        return Ok((a..b).collect());
    }
    text.split(',').map(|s| s.trim().parse().map_err(|e| format!("bad seed {s:?}: {e}"))).collect()
}
