//! Shared empirical estimates for the optimistic baseline agents.
//!
//! Tracks per state-action visit counts, mean observed reward (one minus the
//! objective cost), mean constrained costs and the empirical kernel, plus the
//! L1 confidence width used as the exploration bonus. The bonus shape is the
//! same for rewards, costs and kernels, with a configurable scale.

use crate::lp::confidence_radius;
use ndarray::{Array2, Array3, ArrayView2, ArrayView3};

#[derive(Debug, Clone)]
pub struct BaselineEstimates {
    reward_sum: Array2<f64>,
    cost_sum: Array3<f64>, // [constraints, states, actions]
    counts: Array3<u64>,
    visits: Array2<u64>,
}

impl BaselineEstimates {
    pub fn new(n_states: usize, n_actions: usize, n_constraints: usize) -> Self {
        assert!(n_states > 0 && n_actions > 0);
        Self {
            reward_sum: Array2::zeros((n_states, n_actions)),
            cost_sum: Array3::zeros((n_constraints, n_states, n_actions)),
            counts: Array3::zeros((n_states, n_actions, n_states)),
            visits: Array2::zeros((n_states, n_actions)),
        }
    }

    pub fn n_states(&self) -> usize {
        self.visits.dim().0
    }

    pub fn n_actions(&self) -> usize {
        self.visits.dim().1
    }

    pub fn n_constraints(&self) -> usize {
        self.cost_sum.dim().0
    }

    /// Records one transition with its full cost vector (objective first).
    pub fn observe(&mut self, state: usize, action: usize, costs: &[f64], next: usize) {
        assert_eq!(costs.len(), self.n_constraints() + 1);
        self.reward_sum[[state, action]] += 1.0 - costs[0];
        for i in 0..self.n_constraints() {
            self.cost_sum[[i, state, action]] += costs[i + 1];
        }
        self.counts[[state, action, next]] += 1;
        self.visits[[state, action]] += 1;
    }

    pub fn visit_count(&self, state: usize, action: usize) -> u64 {
        self.visits[[state, action]]
    }

    pub fn visits(&self) -> ArrayView2<'_, u64> {
        self.visits.view()
    }

    pub fn counts(&self) -> ArrayView3<'_, u64> {
        self.counts.view()
    }

    /// Mean observed reward; zero for unvisited pairs.
    pub fn mean_reward(&self, state: usize, action: usize) -> f64 {
        let n = self.visits[[state, action]];
        if n == 0 {
            0.0
        } else {
            self.reward_sum[[state, action]] / n as f64
        }
    }

    /// Mean observed constrained cost (`signal` in `1..=m`); zero for
    /// unvisited pairs.
    pub fn mean_cost(&self, signal: usize, state: usize, action: usize) -> f64 {
        assert!(signal >= 1 && signal <= self.n_constraints());
        let n = self.visits[[state, action]];
        if n == 0 {
            0.0
        } else {
            self.cost_sum[[signal - 1, state, action]] / n as f64
        }
    }

    /// Empirical kernel; unvisited rows are uniform.
    pub fn empirical_kernel(&self) -> Array3<f64> {
        let (s_n, a_n) = self.visits.dim();
        let mut kernel = Array3::zeros((s_n, a_n, s_n));
        for s in 0..s_n {
            for a in 0..a_n {
                let n = self.visits[[s, a]];
                if n == 0 {
                    for s2 in 0..s_n {
                        kernel[[s, a, s2]] = 1.0 / s_n as f64;
                    }
                } else {
                    for s2 in 0..s_n {
                        kernel[[s, a, s2]] = self.counts[[s, a, s2]] as f64 / n as f64;
                    }
                }
            }
        }
        kernel
    }

    /// Exploration bonus for one pair at time `t`: the shared confidence
    /// width scaled by `scale`. Nonnegative and nonincreasing in the visit
    /// count.
    pub fn bonus(&self, state: usize, action: usize, t: u64, delta: f64, scale: f64) -> f64 {
        scale
            * confidence_radius(
                self.visits[[state, action]],
                t,
                delta,
                self.n_states(),
                self.n_actions(),
            )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn means_and_counts_accumulate() {
        let mut est = BaselineEstimates::new(2, 2, 1);
        est.observe(0, 1, &[0.25, 1.0], 1);
        est.observe(0, 1, &[0.75, 0.0], 0);
        assert_eq!(est.visit_count(0, 1), 2);
        assert_abs_diff_eq!(est.mean_reward(0, 1), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(est.mean_cost(1, 0, 1), 0.5, epsilon = 1e-12);
        assert_eq!(est.counts()[[0, 1, 1]], 1);
        assert_eq!(est.counts()[[0, 1, 0]], 1);
        let k = est.empirical_kernel();
        assert_abs_diff_eq!(k[[0, 1, 0]], 0.5, epsilon = 1e-12);
        // Unvisited pair: zero estimates, uniform kernel row.
        assert_abs_diff_eq!(est.mean_reward(1, 0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k[[1, 0, 0]], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn bonus_is_nonnegative_and_nonincreasing() {
        let mut est = BaselineEstimates::new(3, 2, 0);
        let before = est.bonus(0, 0, 100, 0.01, 1.0);
        for _ in 0..10 {
            est.observe(0, 0, &[0.5], 1);
        }
        let after = est.bonus(0, 0, 100, 0.01, 1.0);
        assert!(before > after);
        assert!(after > 0.0);
        assert_abs_diff_eq!(
            est.bonus(0, 0, 100, 0.01, 0.5),
            0.5 * after,
            epsilon = 1e-12
        );
        assert_eq!(est.bonus(0, 0, 100, 0.01, 0.0), 0.0);
    }
}
