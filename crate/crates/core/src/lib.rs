//! Frequency-based search-control for Dyna-style model-based reinforcement
//! learning.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every algorithmic piece:
//!
//! - [`diffcore`]: a small tanh/ReLU MLP with parameter gradients, Adam, and
//!   exact input-space gradients, Hessians and third derivatives.
//! - [`envmodel`]: MountainCar, MazeGridWorld, the true model and an online
//!   learned dynamics model.
//! - [`searchctl`]: covariance-preconditioned hill climbing on the value
//!   function or on the local-frequency criterion, and the search-control queue.
//! - [`agents`]: ER, prioritized ER and the Dyna variants sharing one DQN path.
//! - [`spectral`]: local Fourier transforms on balls and numerical checks of
//!   the gradient/Hessian energy identities.
//! - [`supervised`]: biased regression datasets on the piecewise sine target.
//!
//! File formats, the experiment harness and the CLI live in the `freqdyna`
//! crate.

#![no_std]

extern crate alloc;

pub mod agents;
pub mod diffcore;
pub mod envmodel;
mod error;
pub mod linalg;
pub mod rng;
pub mod searchctl;
pub mod spectral;
pub mod supervised;

pub use error::{Error, Result};

/// A point in an environment's state space.
pub type StateVec = alloc::vec::Vec<f64>;
