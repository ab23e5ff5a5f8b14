//! Multi-objective linear bandits with effective-Pareto-optimal greedy
//! policies: numerics, instance generation, Pareto metrics, goodness
//! verification, policies and an experiment harness.

pub mod error;
pub mod cli;
pub mod goodness;
pub mod harness;
pub mod instances;
pub mod numerics;
pub mod pareto;
pub mod policies;

pub use error::{Error, Result};
pub use instances::{ContextSampler, Instance};
pub use pareto::{effective_pareto_gap, pareto_front, pareto_gap, GapResult, RewardTable};
pub use policies::{observe, policy_step, EstimatorState, PolicyConfig, PolicyKind};
