//! Conservative baseline with forced uniform exploration.
//!
//! Episode `k` runs `k * h` steps: the first `h` under the uniform policy,
//! the remaining `(k - 1) * h` under a policy planned at the phase boundary
//! from the empirical kernel with pessimistic constrained costs
//! (`min(cbar_i + b, 1)`) and an optimistic objective (`1 - min(rbar + b, 1)`).
//! The first episode is therefore pure exploration.

use super::{estimates::BaselineEstimates, Agent, AgentError};
use crate::lp::{policy_from_occupancy, solve_cmdp_lp, PlanOutcome};
use crate::model::{Cmdp, StationaryPolicy};
use ndarray::{Array3, ArrayView3};
use rand::RngCore;

pub struct CUcrlAgent {
    thresholds: Vec<f64>,
    delta: f64,
    bonus_scale: f64,
    h: u64,
    est: BaselineEstimates,
    uniform: StationaryPolicy,
    policy: StationaryPolicy,
    t: u64,
    k: u64,
    pos: u64,
    fallback: bool,
}

impl CUcrlAgent {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        thresholds: Vec<f64>,
        h: u64,
        delta: f64,
        bonus_scale: f64,
    ) -> Self {
        assert!(h >= 1, "exploration phase must have at least one step");
        let uniform = StationaryPolicy::uniform(n_states, n_actions);
        Self {
            est: BaselineEstimates::new(n_states, n_actions, thresholds.len()),
            policy: uniform.clone(),
            uniform,
            t: 1,
            k: 1,
            pos: 0,
            fallback: false,
            thresholds,
            delta,
            bonus_scale,
            h,
        }
    }

    /// True while the current step belongs to the uniform phase.
    pub fn is_exploring(&self) -> bool {
        self.pos < self.h
    }

    fn plan(&mut self) -> Result<(), AgentError> {
        let (s_n, a_n) = (self.est.n_states(), self.est.n_actions());
        let m = self.thresholds.len();
        let mut costs = Array3::zeros((m + 1, s_n, a_n));
        for s in 0..s_n {
            for a in 0..a_n {
                let b = self.est.bonus(s, a, self.t, self.delta, self.bonus_scale);
                let optimistic_reward = (self.est.mean_reward(s, a) + b).min(1.0);
                costs[[0, s, a]] = 1.0 - optimistic_reward;
                for i in 1..=m {
                    costs[[i, s, a]] = (self.est.mean_cost(i, s, a) + b).min(1.0);
                }
            }
        }
        let model = Cmdp::new(
            self.est.empirical_kernel(),
            costs,
            self.thresholds.clone(),
            0,
        )?;
        match solve_cmdp_lp(&model) {
            PlanOutcome::Optimal { occupancy, .. } => {
                self.policy = policy_from_occupancy(&occupancy);
                self.fallback = false;
            }
            PlanOutcome::Infeasible { .. } => {
                self.policy = self.uniform.clone();
                self.fallback = true;
            }
            PlanOutcome::NumericalFailure { detail } => {
                return Err(AgentError::Planner { detail });
            }
        }
        Ok(())
    }
}

impl Agent for CUcrlAgent {
    fn reset(&mut self, _rng: &mut dyn RngCore) -> Result<(), AgentError> {
        let (s_n, a_n) = (self.est.n_states(), self.est.n_actions());
        self.est = BaselineEstimates::new(s_n, a_n, self.thresholds.len());
        self.policy = self.uniform.clone();
        self.t = 1;
        self.k = 1;
        self.pos = 0;
        self.fallback = false;
        Ok(())
    }

    fn act(&self, state: usize, rng: &mut dyn RngCore) -> usize {
        if self.is_exploring() {
            self.uniform.sample_action(state, rng)
        } else {
            self.policy.sample_action(state, rng)
        }
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
        if self.pos == self.k * self.h {
            self.k += 1;
            self.pos = 0;
        } else if self.pos == self.h {
            // Phase boundary inside episode k >= 2: plan for the exploit part.
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
        if self.is_exploring() {
            &self.uniform
        } else {
            &self.policy
        }
    }

    fn transition_counts(&self) -> Option<ArrayView3<'_, u64>> {
        Some(self.est.counts())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn episode_schedule_is_h_then_k_minus_one_h() {
        let mut agent = CUcrlAgent::new(2, 2, vec![0.3], 5, 0.01, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        agent.reset(&mut rng).unwrap();
        let mut seen = Vec::new();
        for _ in 0..30 {
            seen.push((agent.episode_index(), agent.is_exploring()));
            agent.observe(0, 0, &[1.0, 0.0], 1, &mut rng).unwrap();
        }
        // Episode 1: 5 uniform steps. Episode 2: 5 uniform + 5 planned.
        // Episode 3: 5 uniform + 10 planned (truncated at step 30).
        for (i, &(k, exploring)) in seen.iter().enumerate() {
            let (want_k, want_exploring) = match i {
                0..=4 => (1, true),
                5..=9 => (2, true),
                10..=14 => (2, false),
                15..=19 => (3, true),
                _ => (3, false),
            };
            assert_eq!(k, want_k, "step {i}");
            assert_eq!(exploring, want_exploring, "step {i}");
        }
    }

    #[test]
    fn pure_exploration_covers_the_first_episode() {
        let mut agent = CUcrlAgent::new(3, 4, vec![0.5], 10, 0.01, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        agent.reset(&mut rng).unwrap();
        let mut actions = std::collections::HashSet::new();
        for _ in 0..10 {
            assert!(agent.is_exploring());
            actions.insert(agent.act(0, &mut rng));
            agent.observe(0, 0, &[0.5, 0.0], 1, &mut rng).unwrap();
        }
        assert!(actions.len() > 1, "uniform phase should vary actions");
        assert_eq!(agent.episode_index(), 2);
    }
}
