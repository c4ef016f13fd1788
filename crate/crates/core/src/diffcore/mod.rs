//! Differentiable network engine: forward passes, parameter gradients for
//! Adam, and exact input-space derivatives up to third order.

mod adam;
mod derivs;
mod mlp;

pub use adam::{adam_step, AdamState, StepOutcome, BETA1, BETA2, EPSILON};
pub use derivs::{
    criterion_direction, criterion_g, criterion_value, grad_criterion, grad_value, input_derivatives,
    input_jet, Criterion, InputDerivatives, Jet, ValueSelector,
};
pub use mlp::{argmax, Activation, LayerShape, MlpNet, Workspace, OUTPUT_INIT};
