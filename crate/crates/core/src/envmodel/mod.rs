//! Benchmark environments, the true model used for planning, and the
//! online-learned dynamics model.

mod learned;
mod maze;
mod mountain_car;

use alloc::vec::Vec;
use rand::RngCore;

use crate::{Error, Result, StateVec};

pub use learned::{LearnedModel, LearnedModelConfig};
pub use maze::{Maze, MazeAction, MazeGeometry, Wall, MAZE_HOLE_CENTERS};
pub use mountain_car::MountainCar;

/// Static description of an environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub state_dim: usize,
    pub action_count: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub step_cap: usize,
}

impl EnvSpec {
    pub fn contains(&self, s: &[f64]) -> bool {
        s.len() == self.state_dim
            && s.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn clip(&self, s: &mut [f64]) {
        for (v, (lo, hi)) in s.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn check_action(&self, a: usize) -> Result<()> {
        if a < self.action_count {
            Ok(())
        } else {
            Err(Error::InvalidAction { action: a, count: self.action_count })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: StateVec,
    pub a: usize,
    pub s_next: StateVec,
    pub r: f64,
    pub terminal: bool,
}

/// Episodic environment with stateless dynamics: the caller carries the
/// current state.
pub trait Environment {
    fn spec(&self) -> &EnvSpec;

    /// Draws an initial state.
    fn reset(&self, rng: &mut dyn RngCore) -> StateVec;

    /// Samples one transition from `(s, a)`.
    fn step(&self, s: &[f64], a: usize, rng: &mut dyn RngCore) -> Result<Transition>;

    /// Samples the next state only, with the reward replaced by its mean.
    /// This is what planning queries see.
    fn step_mean_reward(&self, s: &[f64], a: usize, rng: &mut dyn RngCore) -> Result<Transition>;

    fn is_terminal(&self, s: &[f64]) -> bool;

    /// Typical per-coordinate magnitude of `s' - s`, used to scale the learned
    /// model's regression targets.
    fn delta_scale(&self) -> Vec<f64>;

    /// A copy with any reward noise removed, used for evaluation episodes.
    fn noiseless(&self) -> Self
    where
        Self: Sized;

    /// Hand-written policy that reaches the goal; used to sanity-check the
    /// dynamics.
    fn scripted_action(&self, s: &[f64], waypoint: &mut usize) -> usize;
}

/// Anything that answers planning queries `(s, a) -> (s', r, terminal)`.
pub trait PlanningModel {
    fn query(&self, s: &[f64], a: usize, rng: &mut dyn RngCore) -> Result<Transition>;
}

/// The environment's own dynamics used as the model.
#[derive(Debug, Clone)]
pub struct TrueModel<E> {
    env: E,
}

impl<E: Environment> TrueModel<E> {
    pub fn new(env: E) -> Self {
        Self { env }
    }

    pub fn env(&self) -> &E {
        &self.env
    }
}

impl<E: Environment> PlanningModel for TrueModel<E> {
    fn query(&self, s: &[f64], a: usize, rng: &mut dyn RngCore) -> Result<Transition> {
        self.env.step_mean_reward(s, a, rng)
    }
}

/// Runs the scripted policy from a fresh start; returns the episode length
/// if the goal was reached within the step cap.
pub fn scripted_episode<E: Environment>(env: &E, rng: &mut dyn RngCore) -> Option<usize> {
    let mut s = env.reset(rng);
    let mut waypoint = 0;
    for t in 1..=env.spec().step_cap {
        let a = env.scripted_action(&s, &mut waypoint);
        let tr = env.step(&s, a, rng).ok()?;
        if tr.terminal {
            return Some(t);
        }
        s = tr.s_next;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn spec_clip_and_contains() {
        let spec = MountainCar::new(0.0).spec().clone();
        let mut s = [-2.0, 0.5];
        assert!(!spec.contains(&s));
        spec.clip(&mut s);
        assert_eq!(s, [-1.2, 0.07]);
        assert!(spec.contains(&s));
        assert!(spec.check_action(3).is_err());
    }

    #[test]
    fn scripted_policies_reach_the_goal() {
        let mut rng = stream(3, Stream::Env);
        for _ in 0..5 {
            let n = scripted_episode(&MountainCar::new(0.0), &mut rng).expect("mountain car goal");
            assert!(n < 400, "{n}");
            let n = scripted_episode(&Maze::new(), &mut rng).expect("maze goal");
            assert!(n < 300, "{n}");
        }
    }

    #[test]
    fn true_model_uses_the_mean_reward() {
        let env = MountainCar::new(0.5);
        let model = TrueModel::new(env.clone());
        let mut rng = stream(1, Stream::Sampling);
        let q = model.query(&[-0.5, 0.0], 2, &mut rng).unwrap();
        let e = env.step(&[-0.5, 0.0], 2, &mut rng).unwrap();
        assert_eq!(q.r, -1.0);
        assert_eq!(q.s_next, e.s_next);
    }
}
