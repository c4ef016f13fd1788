use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::{EnvSpec, Environment, PlanningModel, Transition};
use crate::diffcore::{adam_step, Activation, AdamState, MlpNet, Workspace};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LearnedModelConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for LearnedModelConfig {
    fn default() -> Self {
        Self { hidden: vec![64, 64], learning_rate: 1e-4, batch_size: 128 }
    }
}

/// ReLU network predicting `s' - s` from `(s, one_hot(a))`. Inputs are
/// mapped from the state box to `[-1, 1]`, targets are divided by the
/// environment's delta scale. Reward and termination come from the known
/// reward function and goal predicate.
#[derive(Debug, Clone)]
pub struct LearnedModel<E> {
    env: E,
    net: MlpNet,
    adam: AdamState,
    delta_scale: Vec<f64>,
    batch_size: usize,
    steps: u64,
}

impl<E: Environment> LearnedModel<E> {
    pub fn new<R: Rng + ?Sized>(env: E, cfg: &LearnedModelConfig, rng: &mut R) -> Result<Self> {
        let spec = env.spec().clone();
        let n = spec.state_dim;
        let mut sizes = vec![n + spec.action_count];
        sizes.extend_from_slice(&cfg.hidden);
        sizes.push(n);
        let mut lo = spec.lower.clone();
        let mut hi = spec.upper.clone();
        lo.extend(core::iter::repeat_n(0.0, spec.action_count));
        hi.extend(core::iter::repeat_n(1.0, spec.action_count));
        let net = MlpNet::new(&sizes, Activation::Relu, rng)?.with_box_normalization(&lo, &hi)?;
        let adam = AdamState::for_net(&net, cfg.learning_rate);
        Ok(Self {
            delta_scale: env.delta_scale(),
            env,
            net,
            adam,
            batch_size: cfg.batch_size,
            steps: 0,
        })
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn training_steps(&self) -> u64 {
        self.steps
    }

    pub fn net(&self) -> &MlpNet {
        &self.net
    }

    fn spec(&self) -> &EnvSpec {
        self.env.spec()
    }

    fn encode(&self, s: &[f64], a: usize, input: &mut Vec<f64>) {
        input.clear();
        input.extend_from_slice(s);
        input.extend((0..self.spec().action_count).map(|k| if k == a { 1.0 } else { 0.0 }));
    }

    /// Predicted `s' - s`, unclipped.
    pub fn predict_delta(&self, s: &[f64], a: usize) -> Result<Vec<f64>> {
        self.spec().check_action(a)?;
        crate::error::check_dim(self.spec().state_dim, s.len())?;
        let mut input = Vec::new();
        self.encode(s, a, &mut input);
        let out = self.net.forward(&input)?;
        Ok(out.iter().zip(&self.delta_scale).map(|(o, k)| o * k).collect())
    }

    /// One Adam step on the mean squared error of the scaled delta. Returns the
    /// batch MSE of `s' - s` in state units, or `None` for an empty batch.
    pub fn train_step(&mut self, batch: &[&Transition]) -> Result<Option<f64>> {
        if batch.is_empty() {
            return Ok(None);
        }
        let n = self.spec().state_dim;
        let mut grads = vec![0.0; self.net.num_params()];
        let mut ws: Workspace = self.net.workspace();
        let mut input = Vec::with_capacity(n + self.spec().action_count);
        let mut dout = vec![0.0; n];
        let norm = 2.0 / (batch.len() * n) as f64;
        let mut mse = 0.0;
        for t in batch {
            self.spec().check_action(t.a)?;
            self.encode(&t.s, t.a, &mut input);
            let out = self.net.forward_with(&input, &mut ws);
            for k in 0..n {
                let target = (t.s_next[k] - t.s[k]) / self.delta_scale[k];
                let err = out[k] - target;
                dout[k] = norm * err;
                mse += (err * self.delta_scale[k]) * (err * self.delta_scale[k]);
            }
            self.net.accumulate_gradient(&mut ws, &dout, &mut grads);
        }
        adam_step(&mut self.net, &mut self.adam, &grads)?;
        self.steps += 1;
        Ok(Some(mse / (batch.len() * n) as f64))
    }

    /// Mean squared error of the predicted `s' - s` over `data`.
    pub fn mse(&self, data: &[Transition]) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let n = self.spec().state_dim;
        let mut total = 0.0;
        for t in data {
            let d = self.predict_delta(&t.s, t.a)?;
            for k in 0..n {
                let e = d[k] - (t.s_next[k] - t.s[k]);
                total += e * e;
            }
        }
        Ok(total / (data.len() * n) as f64)
    }
}

impl<E: Environment> PlanningModel for LearnedModel<E> {
    fn query(&self, s: &[f64], a: usize, _rng: &mut dyn RngCore) -> Result<Transition> {
        let d = self.predict_delta(s, a)?;
        let mut s_next: Vec<f64> = s.iter().zip(&d).map(|(x, dx)| x + dx).collect();
        self.spec().clip(&mut s_next);
        let terminal = self.env.is_terminal(&s_next);
        Ok(Transition { s: s.to_vec(), a, s_next, r: -1.0, terminal })
    }
}
