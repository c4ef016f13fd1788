use alloc::vec;
use alloc::vec::Vec;

use rand::distr::{Distribution, Uniform};
use rand::RngCore;
use rand_distr::Normal;

use super::{EnvSpec, Environment, Transition};
use crate::{Error, Result, StateVec};

pub const MIN_POSITION: f64 = -1.2;
pub const MAX_POSITION: f64 = 0.6;
pub const MAX_SPEED: f64 = 0.07;
pub const GOAL_POSITION: f64 = 0.5;
const FORCE: f64 = 0.001;
const GRAVITY: f64 = 0.0025;

/// Classic MountainCar with three actions (push left, coast, push right) and
/// rewards drawn from `N(-1, sigma^2)`.
#[derive(Debug, Clone)]
pub struct MountainCar {
    spec: EnvSpec,
    reward_sigma: f64,
}

impl MountainCar {
    pub fn new(reward_sigma: f64) -> Self {
        Self {
            spec: EnvSpec {
                state_dim: 2,
                action_count: 3,
                lower: vec![MIN_POSITION, -MAX_SPEED],
                upper: vec![MAX_POSITION, MAX_SPEED],
                step_cap: 2000,
            },
            reward_sigma,
        }
    }

    pub fn reward_sigma(&self) -> f64 {
        self.reward_sigma
    }

    fn dynamics(&self, s: &[f64], a: usize) -> Result<(StateVec, bool)> {
        self.spec.check_action(a)?;
        if s.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: s.len() });
        }
        let (pos, vel) = (s[0], s[1]);
        let mut vel = vel + FORCE * (a as f64 - 1.0) - GRAVITY * libm::cos(3.0 * pos);
        vel = vel.clamp(-MAX_SPEED, MAX_SPEED);
        let pos = (pos + vel).clamp(MIN_POSITION, MAX_POSITION);
        if pos == MIN_POSITION && vel < 0.0 {
            vel = 0.0;
        }
        Ok((vec![pos, vel], pos >= GOAL_POSITION))
    }
}

impl Environment for MountainCar {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&self, rng: &mut dyn RngCore) -> StateVec {
        let start = Uniform::new(-0.6, -0.4).expect("valid range");
        vec![start.sample(rng), 0.0]
    }

    fn step(&self, s: &[f64], a: usize, rng: &mut dyn RngCore) -> Result<Transition> {
        let (s_next, terminal) = self.dynamics(s, a)?;
        let r = if self.reward_sigma > 0.0 {
            Normal::new(-1.0, self.reward_sigma)
                .map_err(|_| Error::invalid("reward sigma"))?
                .sample(rng)
        } else {
            -1.0
        };
        Ok(Transition { s: s.to_vec(), a, s_next, r, terminal })
    }

    fn step_mean_reward(&self, s: &[f64], a: usize, _rng: &mut dyn RngCore) -> Result<Transition> {
        let (s_next, terminal) = self.dynamics(s, a)?;
        Ok(Transition { s: s.to_vec(), a, s_next, r: -1.0, terminal })
    }

    fn is_terminal(&self, s: &[f64]) -> bool {
        s[0] >= GOAL_POSITION
    }

    fn delta_scale(&self) -> Vec<f64> {
        vec![MAX_SPEED, FORCE + GRAVITY]
    }

    fn noiseless(&self) -> Self {
        Self::new(0.0)
    }

    /// Energy pumping: push in the direction of motion.
    fn scripted_action(&self, s: &[f64], _waypoint: &mut usize) -> usize {
        if s[1] >= 0.0 {
            2
        } else {
            0
        }
    }
}
