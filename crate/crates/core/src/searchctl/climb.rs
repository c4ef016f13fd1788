use alloc::vec::Vec;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

use super::queue::{SearchControlQueue, StatePool};
use crate::diffcore::{criterion_direction, grad_value, Criterion, MlpNet, ValueSelector};
use crate::envmodel::EnvSpec;
use crate::linalg::{distance, norm, SquareMatrix};
use crate::{Error, Result, StateVec};

/// Which field a climb ascends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// Ascend the frequency criterion; starts are drawn from the queue.
    Frequency,
    /// Ascend the value estimate; starts are drawn from the replay buffer.
    Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HillClimbConfig {
    pub alpha: f64,
    pub eta: f64,
    /// Probability of choosing [`Rule::Frequency`].
    pub p: f64,
    /// States to accept per call.
    pub m: usize,
    pub criterion: Criterion,
    /// Attempts allowed per requested state.
    pub budget_per_state: usize,
}

impl Default for HillClimbConfig {
    fn default() -> Self {
        Self { alpha: 0.01, eta: 0.01, p: 0.5, m: 20, criterion: Criterion::Full, budget_per_state: 50 }
    }
}

impl HillClimbConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::invalid("p must lie in [0, 1]"));
        }
        if !(self.alpha > 0.0) || !(self.eta >= 0.0) {
            return Err(Error::invalid("alpha must be positive and eta non-negative"));
        }
        if self.m == 0 || self.budget_per_state == 0 {
            return Err(Error::invalid("m and the attempt budget must be positive"));
        }
        Ok(())
    }
}

/// `Σ̂` and a symmetric square root of `Σ̂ + 1e-8 I`, computed once per harvest.
#[derive(Debug, Clone, PartialEq)]
pub struct Preconditioner {
    sigma: SquareMatrix,
    noise_root: SquareMatrix,
}

impl Preconditioner {
    pub fn new(sigma: SquareMatrix) -> Self {
        let noise_root = sigma.add_diagonal(1e-8).psd_sqrt();
        Self { sigma, noise_root }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(SquareMatrix::identity(n))
    }

    pub fn sigma(&self) -> &SquareMatrix {
        &self.sigma
    }
}

/// One preconditioned noisy ascent step:
/// `s + α Σ̂d / |Σ̂d| + x` with `x ~ N(0, η Σ̂)`. The deterministic term is
/// dropped when `|Σ̂d| < 1e-12`.
pub fn hc_step(
    s: &[f64],
    direction: &[f64],
    pre: &Preconditioner,
    alpha: f64,
    eta: f64,
    rng: &mut dyn RngCore,
) -> StateVec {
    let mut out = s.to_vec();
    let v = pre.sigma.mul_vec(direction);
    let nv = norm(&v);
    if nv >= 1e-12 {
        for (o, vi) in out.iter_mut().zip(&v) {
            *o += alpha * vi / nv;
        }
    }
    if eta > 0.0 {
        let z: Vec<f64> = (0..s.len()).map(|_| StandardNormal.sample(rng)).collect();
        let x = pre.noise_root.mul_vec(&z);
        let k = libm::sqrt(eta);
        for (o, xi) in out.iter_mut().zip(&x) {
            *o += k * xi;
        }
    }
    out
}

/// Supplies ascent directions for the two rules.
pub trait ClimbField {
    fn direction(&self, rule: Rule, s: &[f64]) -> Result<Vec<f64>>;
}

/// Directions from a Q-network through `V(s) = max_a Q(s, a)`.
#[derive(Debug, Clone, Copy)]
pub struct QField<'a> {
    pub net: &'a MlpNet,
    pub criterion: Criterion,
}

impl ClimbField for QField<'_> {
    fn direction(&self, rule: Rule, s: &[f64]) -> Result<Vec<f64>> {
        match rule {
            Rule::Frequency => criterion_direction(self.net, s, ValueSelector::MaxOutput, self.criterion),
            Rule::Value => grad_value(self.net, s, ValueSelector::MaxOutput),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HarvestReport {
    pub accepted: usize,
    pub attempts: usize,
    pub frequency_choices: usize,
    pub value_choices: usize,
    pub restarts: usize,
    /// The attempt budget ran out before `m` states were accepted.
    pub exhausted: bool,
}

/// Runs hill climbs until `cfg.m` states have been accepted into `queue` by
/// the current climb, or the attempt budget `budget_per_state * m` is spent.
///
/// A state is accepted when it has moved more than `eps_a * sqrt(n)` from the
/// last accepted state (or the climb's start). Leaving the state bounds
/// restarts the climb with a fresh rule and start, and resets the count.
#[allow(clippy::too_many_arguments)]
pub fn harvest(
    queue: &mut SearchControlQueue,
    er: &dyn StatePool,
    field: &dyn ClimbField,
    pre: &Preconditioner,
    cfg: &HillClimbConfig,
    spec: &EnvSpec,
    eps_a: f64,
    rng: &mut dyn RngCore,
) -> Result<HarvestReport> {
    if er.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let mut report = HarvestReport::default();
    let budget = cfg.budget_per_state * cfg.m;
    let radius = eps_a * libm::sqrt(spec.state_dim as f64);

    let begin = |queue: &SearchControlQueue, report: &mut HarvestReport, rng: &mut dyn RngCore| {
        let rule = if rng.random::<f64>() < cfg.p { Rule::Frequency } else { Rule::Value };
        let pool: &dyn StatePool = match rule {
            Rule::Frequency if !queue.is_empty() => queue,
            _ => er,
        };
        match rule {
            Rule::Frequency => report.frequency_choices += 1,
            Rule::Value => report.value_choices += 1,
        }
        let s = pool.state(rng.random_range(0..pool.len())).to_vec();
        (rule, s)
    };

    let (mut rule, mut s) = begin(queue, &mut report, rng);
    let mut anchor = s.clone();
    let mut count = 0;
    while count < cfg.m {
        if report.attempts == budget {
            report.exhausted = true;
            break;
        }
        report.attempts += 1;
        let d = field.direction(rule, &s)?;
        s = hc_step(&s, &d, pre, cfg.alpha, cfg.eta, rng);
        if !spec.contains(&s) {
            report.restarts += 1;
            (rule, s) = begin(queue, &mut report, rng);
            anchor.clone_from(&s);
            count = 0;
            continue;
        }
        if distance(&s, &anchor) > radius {
            queue.push(s.clone());
            anchor.clone_from(&s);
            count += 1;
            report.accepted += 1;
        }
    }
    Ok(report)
}
