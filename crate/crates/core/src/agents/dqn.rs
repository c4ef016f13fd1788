use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::diffcore::{adam_step, argmax, AdamState, MlpNet, StepOutcome, Workspace};
use crate::envmodel::Transition;
use crate::{Error, Result};

/// ε-greedy action: uniform with probability `epsilon`, otherwise the greedy
/// action with ties to the lowest index.
pub fn act(qnet: &MlpNet, s: &[f64], epsilon: f64, rng: &mut dyn RngCore) -> Result<usize> {
    let actions = qnet.output_dim();
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return Ok(rng.random_range(0..actions));
    }
    Ok(argmax(&qnet.forward(s)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateResult {
    /// Mean squared TD error before the step.
    pub loss: f64,
    /// `Q(s, a) - target` per batch element.
    pub td_errors: Vec<f64>,
    /// The gradient was not finite and no step was taken.
    pub skipped: bool,
}

/// Online and target Q-networks with their optimizer and scratch space.
#[derive(Debug, Clone)]
pub struct QLearner {
    pub qnet: MlpNet,
    pub target: MlpNet,
    adam: AdamState,
    ws: Workspace,
    target_ws: Workspace,
    grads: Vec<f64>,
    pub gamma: f64,
    sync_every: u64,
    updates: u64,
    syncs: u64,
}

impl QLearner {
    pub fn new(qnet: MlpNet, learning_rate: f64, gamma: f64, sync_every: u64) -> Self {
        Self {
            target: qnet.clone(),
            adam: AdamState::for_net(&qnet, learning_rate),
            ws: qnet.workspace(),
            target_ws: qnet.workspace(),
            grads: vec![0.0; qnet.num_params()],
            qnet,
            gamma,
            sync_every: sync_every.max(1),
            updates: 0,
            syncs: 0,
        }
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn target_syncs(&self) -> u64 {
        self.syncs
    }

    pub fn greedy(&mut self, s: &[f64]) -> usize {
        argmax(self.qnet.forward_with(s, &mut self.ws))
    }

    /// One update on the mixed batch, then a target copy every `sync_every`
    /// updates. Skipped steps still count toward the sync period.
    pub fn update(&mut self, batch: &[&Transition]) -> Result<UpdateResult> {
        let out = dqn_step(
            &mut self.qnet,
            &self.target,
            &mut self.adam,
            batch,
            self.gamma,
            &mut self.ws,
            &mut self.target_ws,
            &mut self.grads,
        )?;
        self.updates += 1;
        if self.updates.is_multiple_of(self.sync_every) {
            self.target.clone_from(&self.qnet);
            self.syncs += 1;
        }
        Ok(out)
    }
}

/// One Adam step on the mean squared TD error with targets
/// `r + γ (1 - terminal) max_a Q'(s', a)` from the frozen target network.
pub fn dqn_update(
    qnet: &mut MlpNet,
    target: &MlpNet,
    adam: &mut AdamState,
    batch: &[&Transition],
    gamma: f64,
) -> Result<UpdateResult> {
    let mut ws = qnet.workspace();
    let mut target_ws = target.workspace();
    let mut grads = vec![0.0; qnet.num_params()];
    dqn_step(qnet, target, adam, batch, gamma, &mut ws, &mut target_ws, &mut grads)
}

#[allow(clippy::too_many_arguments)]
fn dqn_step(
    qnet: &mut MlpNet,
    target: &MlpNet,
    adam: &mut AdamState,
    batch: &[&Transition],
    gamma: f64,
    ws: &mut Workspace,
    target_ws: &mut Workspace,
    grads: &mut [f64],
) -> Result<UpdateResult> {
    if batch.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let actions = qnet.output_dim();
    grads.iter_mut().for_each(|g| *g = 0.0);
    let mut dout = vec![0.0; actions];
    let mut td_errors = Vec::with_capacity(batch.len());
    let scale = 2.0 / batch.len() as f64;
    let mut loss = 0.0;
    for t in batch {
        if t.a >= actions {
            return Err(Error::InvalidAction { action: t.a, count: actions });
        }
        let y = if t.terminal {
            t.r
        } else {
            let next = target.forward_with(&t.s_next, target_ws);
            t.r + gamma * next.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        };
        let q = qnet.forward_with(&t.s, ws)[t.a];
        let delta = q - y;
        loss += delta * delta;
        td_errors.push(delta);
        dout[t.a] = scale * delta;
        qnet.accumulate_gradient(ws, &dout, grads);
        dout[t.a] = 0.0;
    }
    loss /= batch.len() as f64;
    let skipped = !loss.is_finite() || adam_step(qnet, adam, grads)? == StepOutcome::SkippedNonFinite;
    Ok(UpdateResult { loss, td_errors, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::Activation;
    use crate::rng::{stream, Stream};

    fn net(seed: u64) -> MlpNet {
        MlpNet::new(&[2, 8, 3], Activation::Tanh, &mut stream(seed, Stream::Init)).unwrap()
    }

    fn fixed_outputs(values: &[f64]) -> MlpNet {
        let mut n = MlpNet::zeros(&[1, values.len()], Activation::Tanh).unwrap();
        for (i, v) in values.iter().enumerate() {
            n.set_bias(0, i, *v);
        }
        n
    }

    #[test]
    fn greedy_choice_and_ties() {
        let mut rng = stream(0, Stream::Explore);
        assert_eq!(act(&fixed_outputs(&[1.0, 3.0, 2.0]), &[0.0], 0.0, &mut rng).unwrap(), 1);
        assert_eq!(act(&fixed_outputs(&[2.0, 2.0, 1.0]), &[0.0], 0.0, &mut rng).unwrap(), 0);
    }

    #[test]
    fn full_exploration_is_uniform() {
        let q = fixed_outputs(&[0.0, 5.0, 0.0]);
        let mut rng = stream(1, Stream::Explore);
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[act(&q, &[0.0], 1.0, &mut rng).unwrap()] += 1;
        }
        let e = n as f64 / 3.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // 99th percentile of chi-square with 2 degrees of freedom.
        assert!(chi2 < 9.21, "{chi2}");
    }

    #[test]
    fn terminal_target_is_the_reward() {
        let mut q = fixed_outputs(&[-1.0, 0.0]);
        let target = fixed_outputs(&[100.0, 100.0]);
        let mut adam = AdamState::for_net(&q, 1e-3);
        let t = Transition { s: vec![0.0], a: 0, s_next: vec![0.0], r: -1.0, terminal: true };
        let before = q.clone();
        let r = dqn_update(&mut q, &target, &mut adam, &[&t], 0.99).unwrap();
        assert_eq!(r.loss, 0.0);
        assert_eq!(r.td_errors, vec![0.0]);
        assert_eq!(q, before);
    }

    #[test]
    fn zero_discount_targets_the_reward() {
        let mut q = fixed_outputs(&[0.5, 0.0]);
        let target = fixed_outputs(&[100.0, 100.0]);
        let mut adam = AdamState::for_net(&q, 1e-3);
        let t = Transition { s: vec![0.0], a: 0, s_next: vec![0.0], r: 2.0, terminal: false };
        let r = dqn_update(&mut q, &target, &mut adam, &[&t], 0.0).unwrap();
        assert_eq!(r.td_errors, vec![0.5 - 2.0]);
    }

    #[test]
    fn target_syncs_every_period() {
        let mut learner = QLearner::new(net(2), 1e-2, 0.9, 3);
        let t = Transition { s: vec![0.1, 0.2], a: 1, s_next: vec![0.3, 0.1], r: 1.0, terminal: false };
        let initial = learner.target.clone();
        for k in 1..=7 {
            learner.update(&[&t]).unwrap();
            if k < 3 {
                assert_eq!(learner.target, initial);
            }
            if k % 3 == 0 {
                assert_eq!(learner.target, learner.qnet);
            } else if k > 3 {
                assert_ne!(learner.target, learner.qnet);
            }
        }
        assert_eq!(learner.target_syncs(), 2);
    }

    /// Two states, two actions. In state 0, action 1 moves to state 1 with
    /// reward 0, action 0 stays with reward 0. In state 1 either action ends the
    /// episode: action 0 pays 1, action 1 pays 0.5.
    #[test]
    fn matches_value_iteration_on_a_toy_mdp() {
        let gamma = 0.9;
        let states = [[1.0, 0.0], [0.0, 1.0]];
        let step = |s: usize, a: usize| -> (usize, f64, bool) {
            match (s, a) {
                (0, 0) => (0, 0.0, false),
                (0, _) => (1, 0.0, false),
                (_, 0) => (1, 1.0, true),
                _ => (1, 0.5, true),
            }
        };
        let mut q_star = [[0.0f64; 2]; 2];
        for _ in 0..500 {
            let mut next = q_star;
            for s in 0..2 {
                for a in 0..2 {
                    let (s2, r, done) = step(s, a);
                    let v = if done { 0.0 } else { q_star[s2][0].max(q_star[s2][1]) };
                    next[s][a] = r + gamma * v;
                }
            }
            q_star = next;
        }
        let data: Vec<Transition> = (0..2)
            .flat_map(|s| (0..2).map(move |a| (s, a)))
            .map(|(s, a)| {
                let (s2, r, terminal) = step(s, a);
                Transition { s: states[s].to_vec(), a, s_next: states[s2].to_vec(), r, terminal }
            })
            .collect();
        let qnet = MlpNet::new(&[2, 16, 2], Activation::Tanh, &mut stream(3, Stream::Init)).unwrap();
        let mut learner = QLearner::new(qnet, 1e-3, gamma, 100);
        let mut rng = stream(3, Stream::Sampling);
        for _ in 0..10_000 {
            let batch: Vec<&Transition> = (0..8).map(|_| &data[rng.random_range(0..4)]).collect();
            learner.update(&batch).unwrap();
        }
        for s in 0..2 {
            let q = learner.qnet.forward(&states[s]).unwrap();
            for a in 0..2 {
                assert!((q[a] - q_star[s][a]).abs() < 0.05, "Q({s},{a}) = {} vs {}", q[a], q_star[s][a]);
            }
        }
    }
}
