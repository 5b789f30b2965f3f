//! Learning agents behind a common trait.
//!
//! All agents interact through the same loop: `reset` once, then repeat
//! `act` / environment step / `observe`. Planning happens inside `reset` and
//! `observe`; a planner that reports infeasibility switches the agent to the
//! uniform fallback policy (visible through [`Agent::fallback_active`]),
//! while numerical failure aborts the run as an error — it is never masked
//! as either verdict.

mod conrl;
mod cucrl;
mod estimates;
mod psconrl;
mod ucrl_cmdp;

pub use conrl::ConrlAgent;
pub use cucrl::CUcrlAgent;
pub use estimates::BaselineEstimates;
pub use psconrl::{EpisodeEnd, EpisodeRecord, PsconrlAgent};
pub use ucrl_cmdp::UcrlCmdpAgent;

use crate::model::{ModelError, StationaryPolicy};
use ndarray::ArrayView3;
use rand::RngCore;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("planner failed: {detail}")]
    Planner { detail: String },
    #[error("internal model construction failed: {0}")]
    Model(#[from] ModelError),
}

pub trait Agent {
    /// Clears learned state and plans the initial policy.
    fn reset(&mut self, rng: &mut dyn RngCore) -> Result<(), AgentError>;

    /// Chooses an action in `state`.
    fn act(&self, state: usize, rng: &mut dyn RngCore) -> usize;

    /// Consumes one transition: the action's full cost vector (objective
    /// first) and the successor state. May replan.
    fn observe(
        &mut self,
        state: usize,
        action: usize,
        costs: &[f64],
        next: usize,
        rng: &mut dyn RngCore,
    ) -> Result<(), AgentError>;

    /// Current episode (or epoch) number, 1-based.
    fn episode_index(&self) -> u64;

    /// True while the agent is running the uniform policy because its last
    /// planning attempt was infeasible.
    fn fallback_active(&self) -> bool;

    /// The policy currently driving `act`.
    fn policy(&self) -> &StationaryPolicy;

    /// The agent's internal transition-count tensor, if it keeps one.
    fn transition_counts(&self) -> Option<ArrayView3<'_, u64>>;
}

/// Plays one fixed policy forever; used for oracle and uniform reference runs.
#[derive(Debug, Clone)]
pub struct FixedPolicyAgent {
    policy: StationaryPolicy,
}

impl FixedPolicyAgent {
    pub fn new(policy: StationaryPolicy) -> Self {
        Self { policy }
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            policy: StationaryPolicy::uniform(n_states, n_actions),
        }
    }
}

impl Agent for FixedPolicyAgent {
    fn reset(&mut self, _rng: &mut dyn RngCore) -> Result<(), AgentError> {
        Ok(())
    }

    fn act(&self, state: usize, rng: &mut dyn RngCore) -> usize {
        self.policy.sample_action(state, rng)
    }

    fn observe(
        &mut self,
        _state: usize,
        _action: usize,
        _costs: &[f64],
        _next: usize,
        _rng: &mut dyn RngCore,
    ) -> Result<(), AgentError> {
        Ok(())
    }

    fn episode_index(&self) -> u64 {
        1
    }

    fn fallback_active(&self) -> bool {
        false
    }

    fn policy(&self) -> &StationaryPolicy {
        &self.policy
    }

    fn transition_counts(&self) -> Option<ArrayView3<'_, u64>> {
        None
    }
}
