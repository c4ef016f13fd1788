use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::dqn::{act, QLearner};
use super::replay::{prioritized_sample, ReplayBuffer, SumTree};
use crate::diffcore::{Activation, Criterion, MlpNet};
use crate::envmodel::{Environment, LearnedModel, LearnedModelConfig, PlanningModel, Transition, TrueModel};
use crate::rng::{stream, RunRng, Stream};
use crate::searchctl::{
    harvest, AcceptThreshold, CovarianceEstimate, HillClimbConfig, Preconditioner, QField, SearchControlQueue,
    StatePool,
};
use crate::{Error, Result, StateVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentVariant {
    Er,
    PrioritizedEr,
    DynaValue,
    DynaFrequency,
    DynaGradNorm,
    DynaHessNorm,
}

impl AgentVariant {
    pub const ALL: [AgentVariant; 6] = [
        AgentVariant::Er,
        AgentVariant::PrioritizedEr,
        AgentVariant::DynaValue,
        AgentVariant::DynaFrequency,
        AgentVariant::DynaGradNorm,
        AgentVariant::DynaHessNorm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AgentVariant::Er => "er",
            AgentVariant::PrioritizedEr => "prioritized-er",
            AgentVariant::DynaValue => "dyna-value",
            AgentVariant::DynaFrequency => "dyna-frequency",
            AgentVariant::DynaGradNorm => "dyna-gradnorm",
            AgentVariant::DynaHessNorm => "dyna-hessnorm",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }

    pub fn is_dyna(self) -> bool {
        !matches!(self, AgentVariant::Er | AgentVariant::PrioritizedEr)
    }

    /// The hill-climbing settings this variant uses, derived from `base`.
    pub fn climb_config(self, base: &HillClimbConfig) -> Option<HillClimbConfig> {
        let (p, criterion) = match self {
            AgentVariant::Er | AgentVariant::PrioritizedEr => return None,
            AgentVariant::DynaValue => (0.0, base.criterion),
            AgentVariant::DynaFrequency => (base.p, Criterion::Full),
            AgentVariant::DynaGradNorm => (base.p, Criterion::GradNorm),
            AgentVariant::DynaHessNorm => (base.p, Criterion::HessNorm),
        };
        Some(HillClimbConfig { p, criterion, ..base.clone() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    True,
    Learned,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::True => "true",
            ModelKind::Learned => "learned",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "true" => Some(ModelKind::True),
            "learned" => Some(ModelKind::Learned),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub gamma: f64,
    pub batch_size: usize,
    /// Fraction of each planning batch simulated from the queue.
    pub beta: f64,
    /// Updates per environment step after warm-up (`d`).
    pub planning_steps: usize,
    pub target_sync: u64,
    pub epsilon: f64,
    pub warmup: u64,
    pub buffer_capacity: usize,
    pub queue_capacity: usize,
    pub hill: HillClimbConfig,
    pub eval_every: u64,
    pub eval_episodes: usize,
    /// Environment steps at which the search-control queue is copied out.
    pub snapshot_steps: Vec<u64>,
    pub model: LearnedModelConfig,
}

impl AgentConfig {
    pub fn mountain_car() -> Self {
        Self {
            hidden: vec![32, 32],
            learning_rate: 1e-3,
            gamma: 0.99,
            batch_size: 32,
            beta: 0.5,
            planning_steps: 10,
            target_sync: 1000,
            epsilon: 0.1,
            warmup: 5000,
            buffer_capacity: 100_000,
            queue_capacity: 100_000,
            hill: HillClimbConfig { m: 20, ..Default::default() },
            eval_every: 1000,
            eval_episodes: 5,
            snapshot_steps: Vec::new(),
            model: LearnedModelConfig::default(),
        }
    }

    pub fn maze() -> Self {
        Self {
            hidden: vec![64, 64],
            planning_steps: 30,
            hill: HillClimbConfig { m: 50, ..Default::default() },
            ..Self::mountain_car()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::invalid("beta must lie in [0, 1]"));
        }
        if self.planning_steps == 0 || self.batch_size == 0 {
            return Err(Error::invalid("planning steps and batch size must be positive"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::invalid("epsilon must lie in [0, 1]"));
        }
        if self.eval_every == 0 || self.target_sync == 0 {
            return Err(Error::invalid("evaluation and target-sync periods must be positive"));
        }
        if self.buffer_capacity == 0 || self.queue_capacity == 0 {
            return Err(Error::invalid("capacities must be positive"));
        }
        self.hill.validate()
    }

    /// `⌊β b⌋`: simulated transitions per planning batch.
    pub fn simulated_per_batch(&self) -> usize {
        libm::floor(self.beta * self.batch_size as f64) as usize
    }
}

/// One line of the metric log. A row is written whenever an episode ends or
/// an evaluation runs; `loss` is the mean over updates since the last row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub env_step: u64,
    pub episode_return: Option<f64>,
    pub eval_return: Option<f64>,
    pub loss: Option<f64>,
    pub queue_size: usize,
    pub model_mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueSnapshot {
    pub env_step: u64,
    pub states: Vec<StateVec>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunCounters {
    pub updates: u64,
    pub skipped_updates: u64,
    pub simulated_transitions: u64,
    pub harvest_calls: u64,
    pub harvest_exhausted: u64,
    pub accepted_states: u64,
    pub restarts: u64,
    pub frequency_choices: u64,
    pub value_choices: u64,
    pub episodes: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    pub rows: Vec<MetricRow>,
    pub snapshots: Vec<QueueSnapshot>,
    pub counters: RunCounters,
    /// The online Q-network at the end of the run.
    pub qnet: Option<MlpNet>,
}

impl RunLog {
    /// `(env_step, eval_return)` pairs in order.
    pub fn eval_curve(&self) -> Vec<(u64, f64)> {
        self.rows.iter().filter_map(|r| r.eval_return.map(|v| (r.env_step, v))).collect()
    }

    /// Mean of the last `points` evaluation returns.
    pub fn final_eval_return(&self, points: usize) -> Option<f64> {
        let curve = self.eval_curve();
        if curve.is_empty() || points == 0 {
            return None;
        }
        let tail = &curve[curve.len().saturating_sub(points)..];
        Some(tail.iter().map(|(_, v)| v).sum::<f64>() / tail.len() as f64)
    }
}

enum Planner<E> {
    True(TrueModel<E>),
    Learned(LearnedModel<E>),
}

impl<E: Environment> PlanningModel for Planner<E> {
    fn query(&self, s: &[f64], a: usize, rng: &mut dyn RngCore) -> Result<Transition> {
        match self {
            Planner::True(m) => m.query(s, a, rng),
            Planner::Learned(m) => m.query(s, a, rng),
        }
    }
}

/// Mean undiscounted return of greedy episodes, each capped at the
/// environment's step limit.
pub fn evaluate<E: Environment>(qnet: &MlpNet, env: &E, episodes: usize, rng: &mut dyn RngCore) -> Result<f64> {
    let mut ws = qnet.workspace();
    let mut total = 0.0;
    for _ in 0..episodes {
        let mut s = env.reset(rng);
        for _ in 0..env.spec().step_cap {
            let a = crate::diffcore::argmax(qnet.forward_with(&s, &mut ws));
            let t = env.step(&s, a, rng)?;
            total += t.r;
            if t.terminal {
                break;
            }
            s = t.s_next;
        }
    }
    Ok(total / episodes.max(1) as f64)
}

/// Mean return of the uniform random policy.
pub fn random_policy_return<E: Environment>(env: &E, episodes: usize, seed: u64) -> Result<f64> {
    let mut rng = stream(seed, Stream::Eval);
    let actions = env.spec().action_count;
    let mut total = 0.0;
    for _ in 0..episodes {
        let mut s = env.reset(&mut rng);
        for _ in 0..env.spec().step_cap {
            let a = rng.random_range(0..actions);
            let t = env.step(&s, a, &mut rng)?;
            total += t.r;
            if t.terminal {
                break;
            }
            s = t.s_next;
        }
    }
    Ok(total / episodes.max(1) as f64)
}

struct Rngs {
    env: RunRng,
    explore: RunRng,
    hill: RunRng,
    sampling: RunRng,
    eval: RunRng,
    model: RunRng,
}

/// Trains one agent for `total_steps` environment steps.
///
/// The first `warmup` steps take uniform random actions and make no value
/// updates (a learned model is trained from the first step). Afterwards each
/// step acts ε-greedily, stores the transition, trains the model, harvests
/// search-control states (Dyna variants), and performs `planning_steps`
/// updates. Every variant makes the same number of updates per step.
pub fn run_agent<E: Environment + Clone>(
    variant: AgentVariant,
    env: &E,
    model: ModelKind,
    cfg: &AgentConfig,
    seed: u64,
    total_steps: u64,
) -> Result<RunLog> {
    cfg.validate()?;
    let mut log = RunLog::default();
    if total_steps == 0 {
        return Ok(log);
    }
    let spec = env.spec().clone();
    let mut init = stream(seed, Stream::Init);
    let mut rngs = Rngs {
        env: stream(seed, Stream::Env),
        explore: stream(seed, Stream::Explore),
        hill: stream(seed, Stream::HillClimb),
        sampling: stream(seed, Stream::Sampling),
        eval: stream(seed, Stream::Eval),
        model: stream(seed, Stream::Model),
    };

    let mut sizes = vec![spec.state_dim];
    sizes.extend_from_slice(&cfg.hidden);
    sizes.push(spec.action_count);
    let qnet = MlpNet::new(&sizes, Activation::Tanh, &mut init)?.with_box_normalization(&spec.lower, &spec.upper)?;
    let mut learner = QLearner::new(qnet, cfg.learning_rate, cfg.gamma, cfg.target_sync);
    let mut planner = match model {
        ModelKind::True => Planner::True(TrueModel::new(env.clone())),
        ModelKind::Learned => Planner::Learned(LearnedModel::new(env.clone(), &cfg.model, &mut init)?),
    };
    let climb = variant.climb_config(&cfg.hill);
    let mut er = ReplayBuffer::new(cfg.buffer_capacity);
    let mut tree = (variant == AgentVariant::PrioritizedEr).then(|| SumTree::new(cfg.buffer_capacity));
    let mut queue = SearchControlQueue::new(cfg.queue_capacity);
    let mut cov = CovarianceEstimate::new(spec.state_dim);
    let mut threshold = AcceptThreshold::new();
    let eval_env = env.noiseless();

    let mut s = env.reset(&mut rngs.env);
    cov.update(&s);
    let (mut episode_return, mut episode_len) = (0.0, 0usize);
    let (mut loss_sum, mut loss_count) = (0.0, 0usize);
    let mut model_mse = None;
    let mut batch_slots: Vec<usize> = Vec::with_capacity(cfg.batch_size);
    let mut simulated: Vec<Transition> = Vec::with_capacity(cfg.batch_size);

    for t in 1..=total_steps {
        let a = if t <= cfg.warmup {
            rngs.explore.random_range(0..spec.action_count)
        } else {
            act(&learner.qnet, &s, cfg.epsilon, &mut rngs.explore)?
        };
        let tr = env.step(&s, a, &mut rngs.env)?;
        threshold.update(&tr.s, &tr.s_next);
        cov.update(&tr.s_next);
        episode_return += tr.r;
        episode_len += 1;
        let terminal = tr.terminal;
        let next = tr.s_next.clone();
        let slot = er.push(tr);
        if let Some(tree) = tree.as_mut() {
            let p = if tree.max_priority() > 0.0 { tree.max_priority() } else { 1.0 };
            tree.update(slot, p);
        }

        if let Planner::Learned(m) = &mut planner {
            let refs: Vec<&Transition> =
                (0..m.batch_size()).map(|_| er.get(rngs.model.random_range(0..er.len()))).collect();
            model_mse = m.train_step(&refs)?;
        }

        if t > cfg.warmup {
            if let Some(hc) = &climb {
                let pre = Preconditioner::new(cov.covariance());
                let field = QField { net: &learner.qnet, criterion: hc.criterion };
                let r = harvest(&mut queue, &er, &field, &pre, hc, &spec, threshold.value(), &mut rngs.hill)?;
                log.counters.harvest_calls += 1;
                log.counters.harvest_exhausted += r.exhausted as u64;
                log.counters.accepted_states += r.accepted as u64;
                log.counters.restarts += r.restarts as u64;
                log.counters.frequency_choices += r.frequency_choices as u64;
                log.counters.value_choices += r.value_choices as u64;
            }
            for _ in 0..cfg.planning_steps {
                batch_slots.clear();
                simulated.clear();
                let n_sim = if climb.is_some() && !queue.is_empty() { cfg.simulated_per_batch() } else { 0 };
                for _ in 0..n_sim {
                    let qs = queue.state(rngs.sampling.random_range(0..queue.len())).to_vec();
                    let qa = learner.greedy(&qs);
                    simulated.push(planner.query(&qs, qa, &mut rngs.sampling)?);
                }
                match tree.as_ref() {
                    Some(tree) => batch_slots.extend(prioritized_sample(tree, er.len(), cfg.batch_size, &mut rngs.sampling)?),
                    None => {
                        for _ in n_sim..cfg.batch_size {
                            batch_slots.push(er.sample_index(&mut rngs.sampling)?);
                        }
                    }
                }
                let batch: Vec<&Transition> = simulated.iter().chain(batch_slots.iter().map(|&i| er.get(i))).collect();
                let out = learner.update(&batch)?;
                log.counters.updates += 1;
                log.counters.simulated_transitions += n_sim as u64;
                if out.skipped {
                    log.counters.skipped_updates += 1;
                } else {
                    loss_sum += out.loss;
                    loss_count += 1;
                }
                if let Some(tree) = tree.as_mut() {
                    for (&slot, delta) in batch_slots.iter().zip(&out.td_errors[n_sim..]) {
                        tree.update(slot, delta.abs() + 1e-6);
                    }
                }
            }
        }

        let mut episode_done = None;
        if terminal || episode_len >= spec.step_cap {
            episode_done = Some(episode_return);
            log.counters.episodes += 1;
            s = env.reset(&mut rngs.env);
            cov.update(&s);
            episode_return = 0.0;
            episode_len = 0;
        } else {
            s = next;
        }
        let eval = if t % cfg.eval_every == 0 {
            Some(evaluate(&learner.qnet, &eval_env, cfg.eval_episodes, &mut rngs.eval)?)
        } else {
            None
        };
        if cfg.snapshot_steps.contains(&t) {
            log.snapshots.push(QueueSnapshot { env_step: t, states: queue.snapshot() });
        }
        if episode_done.is_some() || eval.is_some() {
            log.rows.push(MetricRow {
                env_step: t,
                episode_return: episode_done,
                eval_return: eval,
                loss: (loss_count > 0).then(|| loss_sum / loss_count as f64),
                queue_size: queue.len(),
                model_mse,
            });
            loss_sum = 0.0;
            loss_count = 0;
        }
    }
    log.qnet = Some(learner.qnet);
    Ok(log)
}
