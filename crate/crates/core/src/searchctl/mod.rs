//! Hill-climbing search-control: covariance preconditioning, the value and
//! frequency ascent rules, acceptance thresholding and the queue they fill.

mod climb;
mod queue;
mod stats;

pub use climb::{harvest, hc_step, ClimbField, HarvestReport, HillClimbConfig, Preconditioner, QField, Rule};
pub use queue::{SearchControlQueue, StatePool};
pub use stats::{AcceptThreshold, CovarianceEstimate};
