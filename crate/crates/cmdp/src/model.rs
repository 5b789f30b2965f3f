//! CMDP container, stationary policies and structural validation.
//!
//! A [`Cmdp`] bundles a transition kernel `p[s][a][s']`, `m + 1` cost tables
//! (index 0 is the objective, indices `1..=m` are constrained), `m` thresholds
//! and an initial state. Shape consistency is enforced at construction; value
//! validity (stochastic rows, costs and thresholds in `[0, 1]`) is checked by
//! [`validate`], which reports every violation rather than stopping at the
//! first.

use ndarray::{Array2, Array3, ArrayView1, ArrayView2, ArrayView3};
use rand::Rng;
use thiserror::Error;

/// Tolerance for simplex membership: row sums must be within this of 1.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("transition tensor has shape {found:?}, expected [{states}, {actions}, {states}]")]
    TransitionShape {
        found: Vec<usize>,
        states: usize,
        actions: usize,
    },
    #[error("cost tensor has shape {found:?}, expected [{signals}, {states}, {actions}]")]
    CostShape {
        found: Vec<usize>,
        signals: usize,
        states: usize,
        actions: usize,
    },
    #[error("{signals} cost signals require {} thresholds, got {thresholds}", signals - 1)]
    ThresholdCount { signals: usize, thresholds: usize },
    #[error("need at least one cost signal (the objective)")]
    NoCostSignal,
    #[error("model failed validation: {0:?}")]
    Invalid(Vec<Violation>),
    #[error("policy row {state} sums to {sum}, expected 1")]
    PolicyRowNotStochastic { state: usize, sum: f64 },
    #[error("policy entry ({state}, {action}) is negative: {value}")]
    PolicyNegativeEntry {
        state: usize,
        action: usize,
        value: f64,
    },
}

/// One structural defect found by [`validate`]. Indices identify the offending
/// entry exactly.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `sum_{s'} p[s][a][s']` differs from 1 by more than [`ROW_SUM_TOL`].
    RowNotStochastic { state: usize, action: usize, sum: f64 },
    /// A transition probability is negative.
    NegativeTransition {
        state: usize,
        action: usize,
        next: usize,
        value: f64,
    },
    /// A transition probability is NaN or infinite.
    NonFiniteTransition {
        state: usize,
        action: usize,
        next: usize,
    },
    /// A cost entry lies outside `[0, 1]` or is not finite.
    CostOutOfRange {
        signal: usize,
        state: usize,
        action: usize,
        value: f64,
    },
    /// A threshold lies outside `[0, 1]` or is not finite.
    ThresholdOutOfRange { index: usize, value: f64 },
    /// The initial state is not a valid state index.
    InitialStateOutOfRange { state: usize, n_states: usize },
}

/// A constrained MDP under the long-run average-cost criterion.
#[derive(Debug, Clone)]
pub struct Cmdp {
    transitions: Array3<f64>,
    costs: Array3<f64>,
    thresholds: Vec<f64>,
    initial_state: usize,
}

impl Cmdp {
    /// Builds a CMDP, rejecting both shape mismatches and value violations.
    pub fn new(
        transitions: Array3<f64>,
        costs: Array3<f64>,
        thresholds: Vec<f64>,
        initial_state: usize,
    ) -> Result<Self, ModelError> {
        let model = Self::new_unchecked(transitions, costs, thresholds, initial_state)?;
        let violations = validate(&model);
        if violations.is_empty() {
            Ok(model)
        } else {
            Err(ModelError::Invalid(violations))
        }
    }

    /// Builds a CMDP checking only shape consistency, so that structurally
    /// broken values can still be constructed and inspected via [`validate`].
    pub fn new_unchecked(
        transitions: Array3<f64>,
        costs: Array3<f64>,
        thresholds: Vec<f64>,
        initial_state: usize,
    ) -> Result<Self, ModelError> {
        let (s, a, s2) = transitions.dim();
        if s != s2 || s == 0 || a == 0 {
            return Err(ModelError::TransitionShape {
                found: transitions.shape().to_vec(),
                states: s,
                actions: a,
            });
        }
        let (signals, cs, ca) = costs.dim();
        if signals == 0 {
            return Err(ModelError::NoCostSignal);
        }
        if cs != s || ca != a {
            return Err(ModelError::CostShape {
                found: costs.shape().to_vec(),
                signals,
                states: s,
                actions: a,
            });
        }
        if thresholds.len() != signals - 1 {
            return Err(ModelError::ThresholdCount {
                signals,
                thresholds: thresholds.len(),
            });
        }
        Ok(Self {
            transitions,
            costs,
            thresholds,
            initial_state,
        })
    }

    pub fn n_states(&self) -> usize {
        self.transitions.dim().0
    }

    pub fn n_actions(&self) -> usize {
        self.transitions.dim().1
    }

    /// Number of constrained cost signals (excludes the objective).
    pub fn n_constraints(&self) -> usize {
        self.thresholds.len()
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn transitions(&self) -> ArrayView3<'_, f64> {
        self.transitions.view()
    }

    pub fn costs(&self) -> ArrayView3<'_, f64> {
        self.costs.view()
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn transition(&self, state: usize, action: usize, next: usize) -> f64 {
        self.transitions[[state, action, next]]
    }

    /// The outcome distribution of `(state, action)` as a length-S row.
    pub fn transition_row(&self, state: usize, action: usize) -> ArrayView1<'_, f64> {
        self.transitions.slice(ndarray::s![state, action, ..])
    }

    pub fn cost(&self, signal: usize, state: usize, action: usize) -> f64 {
        self.costs[[signal, state, action]]
    }

    /// Replaces the transition kernel, keeping costs and thresholds. Shape must
    /// match; values are validated.
    pub fn with_transitions(&self, transitions: Array3<f64>) -> Result<Self, ModelError> {
        Self::new(
            transitions,
            self.costs.clone(),
            self.thresholds.clone(),
            self.initial_state,
        )
    }
}

/// Checks all value-level invariants and returns every violation found.
///
/// Total on any shape-consistent [`Cmdp`]; an empty result means the model is
/// well formed.
pub fn validate(model: &Cmdp) -> Vec<Violation> {
    let mut out = Vec::new();
    let (s_n, a_n, _) = model.transitions.dim();
    for s in 0..s_n {
        for a in 0..a_n {
            let mut sum = 0.0;
            let mut row_finite = true;
            for s2 in 0..s_n {
                let p = model.transitions[[s, a, s2]];
                if !p.is_finite() {
                    out.push(Violation::NonFiniteTransition {
                        state: s,
                        action: a,
                        next: s2,
                    });
                    row_finite = false;
                } else if p < 0.0 {
                    out.push(Violation::NegativeTransition {
                        state: s,
                        action: a,
                        next: s2,
                        value: p,
                    });
                }
                sum += p;
            }
            if row_finite && (sum - 1.0).abs() > ROW_SUM_TOL {
                out.push(Violation::RowNotStochastic {
                    state: s,
                    action: a,
                    sum,
                });
            }
        }
    }
    let (signals, _, _) = model.costs.dim();
    for i in 0..signals {
        for s in 0..s_n {
            for a in 0..a_n {
                let c = model.costs[[i, s, a]];
                if !c.is_finite() || !(0.0..=1.0).contains(&c) {
                    out.push(Violation::CostOutOfRange {
                        signal: i,
                        state: s,
                        action: a,
                        value: c,
                    });
                }
            }
        }
    }
    for (i, &tau) in model.thresholds.iter().enumerate() {
        if !tau.is_finite() || !(0.0..=1.0).contains(&tau) {
            out.push(Violation::ThresholdOutOfRange { index: i, value: tau });
        }
    }
    if model.initial_state >= s_n {
        out.push(Violation::InitialStateOutOfRange {
            state: model.initial_state,
            n_states: s_n,
        });
    }
    out
}

/// A randomized stationary policy: one action distribution per state.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPolicy {
    probs: Array2<f64>,
}

impl StationaryPolicy {
    /// Validates that every row is a distribution (nonnegative, sums to 1
    /// within [`ROW_SUM_TOL`]).
    pub fn new(probs: Array2<f64>) -> Result<Self, ModelError> {
        for (s, row) in probs.outer_iter().enumerate() {
            let mut sum = 0.0;
            for (a, &p) in row.iter().enumerate() {
                if !p.is_finite() || p < 0.0 {
                    return Err(ModelError::PolicyNegativeEntry {
                        state: s,
                        action: a,
                        value: p,
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(ModelError::PolicyRowNotStochastic { state: s, sum });
            }
        }
        Ok(Self { probs })
    }

    /// The uniform policy over `n_actions` in every state.
    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        assert!(n_states > 0 && n_actions > 0);
        Self {
            probs: Array2::from_elem((n_states, n_actions), 1.0 / n_actions as f64),
        }
    }

    /// The deterministic policy playing `actions[s]` in state `s`.
    pub fn deterministic(actions: &[usize], n_actions: usize) -> Self {
        let mut probs = Array2::zeros((actions.len(), n_actions));
        for (s, &a) in actions.iter().enumerate() {
            assert!(a < n_actions, "action {a} out of range in state {s}");
            probs[[s, a]] = 1.0;
        }
        Self { probs }
    }

    pub fn n_states(&self) -> usize {
        self.probs.dim().0
    }

    pub fn n_actions(&self) -> usize {
        self.probs.dim().1
    }

    pub fn probs(&self) -> ArrayView2<'_, f64> {
        self.probs.view()
    }

    pub fn prob(&self, state: usize, action: usize) -> f64 {
        self.probs[[state, action]]
    }

    /// Samples an action in `state` using a single uniform draw.
    pub fn sample_action<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let row = self.probs.row(state);
        let mut acc = 0.0;
        for (a, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return a;
            }
        }
        // Rounding left u >= total mass; fall back to the last positive entry.
        row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}
