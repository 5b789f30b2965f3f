//! Posterior-sampling learner for constrained MDPs.
//!
//! Costs and thresholds are known; only the transition kernel is learned,
//! through per-row Dirichlet posteriors. At the start of each episode the
//! agent draws one kernel from the posterior, solves the occupancy-measure
//! LP on it and follows the extracted policy for the whole episode. An
//! infeasible draw falls back to the uniform policy for that episode.
//!
//! Episode `k` ends as soon as either
//! (i) some pair's visit count reaches twice its count at the episode start
//!     (floored at one), or
//! (ii) the episode length reaches the previous episode's length plus one.
//! The very first episode follows a virtual previous length of one.

use super::{Agent, AgentError};
use crate::lp::{policy_from_occupancy, solve_cmdp_lp, PlanOutcome};
use crate::model::{Cmdp, StationaryPolicy};
use crate::posterior::DirichletPosterior;
use ndarray::{Array2, Array3, ArrayView3};
use rand::RngCore;

/// Why an episode closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeEnd {
    /// Criterion (i): this pair's visits doubled within the episode.
    Doubled { state: usize, action: usize },
    /// Criterion (ii): the episode reached the previous length plus one.
    LengthCap,
}

/// One episode as the agent experienced it. `end` is `None` only for the
/// episode still open when the run stops.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeRecord {
    pub index: u64,
    /// First acting time of the episode (time starts at 1).
    pub start_t: u64,
    pub length: u64,
    pub fallback: bool,
    pub end: Option<EpisodeEnd>,
}

pub struct PsconrlAgent {
    costs: Array3<f64>,
    thresholds: Vec<f64>,
    prior_value: f64,
    posterior: DirichletPosterior,
    policy: StationaryPolicy,
    fallback: bool,
    t: u64,
    episode_start: u64,
    prev_length: u64,
    k: u64,
    start_visits: Array2<u64>,
    doubled: Option<(usize, usize)>,
    episodes: Vec<EpisodeRecord>,
}

impl PsconrlAgent {
    /// `costs` is `[signals, states, actions]` with the objective first;
    /// `thresholds` has one entry per constrained signal.
    pub fn new(costs: Array3<f64>, thresholds: Vec<f64>, prior_value: f64) -> Self {
        let (signals, s_n, a_n) = costs.dim();
        assert!(signals == thresholds.len() + 1, "one threshold per constraint");
        assert!(s_n > 0 && a_n > 0);
        Self {
            posterior: DirichletPosterior::symmetric(s_n, a_n, prior_value),
            policy: StationaryPolicy::uniform(s_n, a_n),
            fallback: false,
            t: 1,
            episode_start: 0,
            prev_length: 1,
            k: 0,
            start_visits: Array2::zeros((s_n, a_n)),
            doubled: None,
            episodes: Vec::new(),
            costs,
            thresholds,
            prior_value,
        }
    }

    pub fn n_states(&self) -> usize {
        self.costs.dim().1
    }

    pub fn n_actions(&self) -> usize {
        self.costs.dim().2
    }

    pub fn posterior(&self) -> &DirichletPosterior {
        &self.posterior
    }

    /// All episodes so far, the still-open one last.
    pub fn episode_log(&self) -> Vec<EpisodeRecord> {
        let mut log = self.episodes.clone();
        if self.k > 0 {
            log.push(EpisodeRecord {
                index: self.k,
                start_t: self.episode_start,
                length: self.t - self.episode_start,
                fallback: self.fallback,
                end: None,
            });
        }
        log
    }

    fn start_episode(&mut self, rng: &mut dyn RngCore) -> Result<(), AgentError> {
        self.prev_length = if self.k == 0 {
            1
        } else {
            self.t - self.episode_start
        };
        self.k += 1;
        self.episode_start = self.t;
        self.start_visits = self.posterior.visits().to_owned();
        self.doubled = None;

        let kernel = self.posterior.sample_kernel(rng);
        let model = Cmdp::new(kernel, self.costs.clone(), self.thresholds.clone(), 0)?;
        match solve_cmdp_lp(&model) {
            PlanOutcome::Optimal { occupancy, .. } => {
                self.policy = policy_from_occupancy(&occupancy);
                self.fallback = false;
            }
            PlanOutcome::Infeasible { .. } => {
                self.policy = StationaryPolicy::uniform(self.n_states(), self.n_actions());
                self.fallback = true;
            }
            PlanOutcome::NumericalFailure { detail } => {
                return Err(AgentError::Planner { detail });
            }
        }
        Ok(())
    }

    fn close_episode(&mut self, end: EpisodeEnd) {
        self.episodes.push(EpisodeRecord {
            index: self.k,
            start_t: self.episode_start,
            length: self.t - self.episode_start,
            fallback: self.fallback,
            end: Some(end),
        });
    }
}

impl Agent for PsconrlAgent {
    fn reset(&mut self, rng: &mut dyn RngCore) -> Result<(), AgentError> {
        let (s_n, a_n) = (self.n_states(), self.n_actions());
        self.posterior = DirichletPosterior::symmetric(s_n, a_n, self.prior_value);
        self.t = 1;
        self.episode_start = 0;
        self.prev_length = 1;
        self.k = 0;
        self.doubled = None;
        self.episodes.clear();
        self.start_episode(rng)
    }

    fn act(&self, state: usize, rng: &mut dyn RngCore) -> usize {
        self.policy.sample_action(state, rng)
    }

    fn observe(
        &mut self,
        state: usize,
        action: usize,
        _costs: &[f64],
        next: usize,
        rng: &mut dyn RngCore,
    ) -> Result<(), AgentError> {
        self.posterior.update(state, action, next);
        if self.doubled.is_none()
            && self.posterior.visit_count(state, action)
                >= 2 * self.start_visits[[state, action]].max(1)
        {
            self.doubled = Some((state, action));
        }
        self.t += 1;
        if let Some((s, a)) = self.doubled {
            self.close_episode(EpisodeEnd::Doubled { state: s, action: a });
            self.start_episode(rng)
        } else if self.t - self.episode_start >= self.prev_length + 1 {
            self.close_episode(EpisodeEnd::LengthCap);
            self.start_episode(rng)
        } else {
            Ok(())
        }
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
        Some(self.posterior.counts())
    }
}
