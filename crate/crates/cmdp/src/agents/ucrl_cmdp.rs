//! Extended-LP baseline: optimism through the transition confidence set.
//!
//! Fixed-length episodes of `ceil(T^alpha)` steps. At each boundary the
//! agent rebuilds the empirical kernel and per-pair L1 radii and solves the
//! extended LP — jointly optimistic over policies and kernels in the set.
//! Rewards and costs enter as plain empirical means; all optimism lives in
//! the kernel set.

use super::{estimates::BaselineEstimates, Agent, AgentError};
use crate::lp::{
    confidence_radius, policy_from_occupancy, solve_extended_lp, ConfidenceSet, PlanOutcome,
};
use crate::model::StationaryPolicy;
use ndarray::{Array2, Array3, ArrayView3};
use rand::RngCore;

pub struct UcrlCmdpAgent {
    thresholds: Vec<f64>,
    delta: f64,
    radius_scale: f64,
    episode_len: u64,
    est: BaselineEstimates,
    policy: StationaryPolicy,
    t: u64,
    k: u64,
    pos: u64,
    fallback: bool,
}

impl UcrlCmdpAgent {
    /// `horizon` and `alpha` fix the episode length `ceil(horizon^alpha)`.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        thresholds: Vec<f64>,
        horizon: u64,
        alpha: f64,
        delta: f64,
        radius_scale: f64,
    ) -> Self {
        assert!(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1)");
        let episode_len = ((horizon as f64).powf(alpha).ceil() as u64).max(1);
        Self {
            est: BaselineEstimates::new(n_states, n_actions, thresholds.len()),
            policy: StationaryPolicy::uniform(n_states, n_actions),
            t: 1,
            k: 1,
            pos: 0,
            fallback: false,
            thresholds,
            delta,
            radius_scale,
            episode_len,
        }
    }

    pub fn episode_len(&self) -> u64 {
        self.episode_len
    }

    fn plan(&mut self) -> Result<(), AgentError> {
        let (s_n, a_n) = (self.est.n_states(), self.est.n_actions());
        let m = self.thresholds.len();
        let mut radii = Array2::zeros((s_n, a_n));
        for s in 0..s_n {
            for a in 0..a_n {
                radii[[s, a]] = self.radius_scale
                    * confidence_radius(self.est.visit_count(s, a), self.t, self.delta, s_n, a_n);
            }
        }
        let set = ConfidenceSet::new(self.est.empirical_kernel(), radii)
            .map_err(|e| AgentError::Planner { detail: e.to_string() })?;
        let mut costs = Array3::zeros((m + 1, s_n, a_n));
        for s in 0..s_n {
            for a in 0..a_n {
                costs[[0, s, a]] = 1.0 - self.est.mean_reward(s, a);
                for i in 1..=m {
                    costs[[i, s, a]] = self.est.mean_cost(i, s, a);
                }
            }
        }
        match solve_extended_lp(&set, &costs, &self.thresholds) {
            PlanOutcome::Optimal { occupancy, .. } => {
                self.policy = policy_from_occupancy(&occupancy);
                self.fallback = false;
            }
            PlanOutcome::Infeasible { .. } => {
                self.policy = StationaryPolicy::uniform(s_n, a_n);
                self.fallback = true;
            }
            PlanOutcome::NumericalFailure { detail } => {
                return Err(AgentError::Planner { detail });
            }
        }
        Ok(())
    }
}

impl Agent for UcrlCmdpAgent {
    fn reset(&mut self, _rng: &mut dyn RngCore) -> Result<(), AgentError> {
        let (s_n, a_n) = (self.est.n_states(), self.est.n_actions());
        self.est = BaselineEstimates::new(s_n, a_n, self.thresholds.len());
        self.t = 1;
        self.k = 1;
        self.pos = 0;
        self.plan()
    }

    fn act(&self, state: usize, rng: &mut dyn RngCore) -> usize {
        self.policy.sample_action(state, rng)
    }

    fn observe(
        &mut self,
        state: usize,
        action: usize,
        costs: &[f64],
        next: usize,
        _rng: &mut dyn RngCore,
    ) -> Result<(), AgentError> {
        self.est.observe(state, action, costs, next);
        self.t += 1;
        self.pos += 1;
        if self.pos == self.episode_len {
            self.k += 1;
            self.pos = 0;
            self.plan()?;
        }
        Ok(())
    }

    fn episode_index(&self) -> u64 {
        self.k
    }

    fn fallback_active(&self) -> bool {
        self.fallback
    }

    fn policy(&self) -> &StationaryPolicy {
        &self.policy
    }

    fn transition_counts(&self) -> Option<ArrayView3<'_, u64>> {
        Some(self.est.counts())
    }
}
