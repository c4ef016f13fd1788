//! ER, prioritized ER and the Dyna variants, all sharing one DQN update path
//! with mixed mini-batches.

mod dqn;
mod replay;
mod run;

pub use dqn::{act, dqn_update, QLearner, UpdateResult};
pub use replay::{prioritized_sample, ReplayBuffer, SumTree};
pub use run::{
    evaluate, random_policy_return, run_agent, AgentConfig, AgentVariant, MetricRow, ModelKind, QueueSnapshot,
    RunCounters, RunLog,
};
