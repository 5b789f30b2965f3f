//! Occupancy-measure planning.
//!
//! The average-cost planning problem is the LP over state-action occupancy
//! measures `mu`:
//!
//! ```text
//! minimize   sum_{s,a} mu(s,a) c_0(s,a)
//! subject to sum_{s,a} mu(s,a) c_i(s,a) <= tau_i          (each constraint)
//!            sum_a mu(s,a) = sum_{s',a} mu(s',a) p(s|s',a)  (flow, each s)
//!            sum_{s,a} mu(s,a) = 1,   mu >= 0
//! ```
//!
//! [`solve_extended_lp`] additionally optimizes over transition kernels in a
//! per-row L1 ball around an empirical center: variables `z(s,a,s')` play the
//! role of `mu(s,a) p(s'|s,a)`, and the ball constraint
//! `sum_{s'} |z - mu pbar| <= beta mu` is linearized with positive-part
//! auxiliaries `d+ >= z - mu pbar`, `2 sum d+ <= beta mu` (the deviation sums
//! to zero over `s'`, so its positive part carries half the L1 norm). Rows
//! with `beta >= 2` are skipped outright — an L1 ball of radius 2 already
//! contains every distribution.
//!
//! Every planner reports one of three outcomes: a solution, infeasibility
//! certified by a positive phase-1 optimum, or numerical failure. Numerical
//! failure is never silently converted into either verdict.

pub mod simplex;

use crate::model::{Cmdp, StationaryPolicy};
use ndarray::{Array2, Array3, ArrayView2, ArrayView3};
use simplex::{LinearProgram, Relation, SimplexOutcome};
use thiserror::Error;

pub use simplex::FEAS_TOL;

/// Entries of a returned occupancy measure are clamped at zero; a row whose
/// total mass is below this is treated as unvisited when extracting a policy.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LpInputError {
    #[error("confidence-set center row ({state}, {action}) is not a distribution")]
    CenterRow { state: usize, action: usize },
    #[error("negative or non-finite radius at ({state}, {action})")]
    BadRadius { state: usize, action: usize },
    #[error("shape mismatch: {context}")]
    Shape { context: String },
}

/// A nonnegative state-action measure with unit total mass.
#[derive(Debug, Clone)]
pub struct OccupancyMeasure {
    mu: Array2<f64>,
}

impl OccupancyMeasure {
    /// Accepts a candidate measure, clamping negatives within `-1e-7` to zero.
    pub fn new(mut mu: Array2<f64>) -> Result<Self, LpInputError> {
        for x in mu.iter_mut() {
            if !x.is_finite() || *x < -1e-7 {
                return Err(LpInputError::Shape {
                    context: format!("measure entry {x} is negative or non-finite"),
                });
            }
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let total: f64 = mu.sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(LpInputError::Shape {
                context: format!("measure mass {total} is not 1"),
            });
        }
        Ok(Self { mu })
    }

    pub fn mu(&self) -> ArrayView2<'_, f64> {
        self.mu.view()
    }

    pub fn n_states(&self) -> usize {
        self.mu.dim().0
    }

    pub fn n_actions(&self) -> usize {
        self.mu.dim().1
    }

    pub fn total_mass(&self) -> f64 {
        self.mu.sum()
    }

    pub fn state_mass(&self, state: usize) -> f64 {
        self.mu.row(state).sum()
    }

    /// `sum_{s,a} mu(s,a) c(s,a)` for one cost table.
    pub fn expected_cost(&self, cost: ArrayView2<'_, f64>) -> f64 {
        let mut acc = 0.0;
        for s in 0..self.n_states() {
            for a in 0..self.n_actions() {
                acc += self.mu[[s, a]] * cost[[s, a]];
            }
        }
        acc
    }

    /// Largest absolute flow imbalance
    /// `|sum_a mu(s,a) - sum_{s',a} mu(s',a) p(s|s',a)|` over states.
    pub fn flow_residual(&self, transitions: ArrayView3<'_, f64>) -> f64 {
        let (s_n, a_n) = self.mu.dim();
        let mut worst: f64 = 0.0;
        for s in 0..s_n {
            let mut acc = self.state_mass(s);
            for s2 in 0..s_n {
                for a in 0..a_n {
                    acc -= self.mu[[s2, a]] * transitions[[s2, a, s]];
                }
            }
            worst = worst.max(acc.abs());
        }
        worst
    }
}

/// Result of a planning call.
#[derive(Debug, Clone)]
pub enum PlanOutcome {
    Optimal {
        occupancy: OccupancyMeasure,
        /// `sum mu c_0` of the returned measure.
        objective: f64,
    },
    /// No feasible occupancy measure; carries the phase-1 certificate.
    Infeasible { phase1_objective: f64 },
    /// The solver gave up; carries a short diagnostic.
    NumericalFailure { detail: String },
}

impl PlanOutcome {
    pub fn is_optimal(&self) -> bool {
        matches!(self, PlanOutcome::Optimal { .. })
    }

    pub fn occupancy(&self) -> Option<&OccupancyMeasure> {
        match self {
            PlanOutcome::Optimal { occupancy, .. } => Some(occupancy),
            _ => None,
        }
    }
}

/// Solves the occupancy-measure LP for a known model.
pub fn solve_cmdp_lp(model: &Cmdp) -> PlanOutcome {
    let (s_n, a_n) = (model.n_states(), model.n_actions());
    let var = |s: usize, a: usize| s * a_n + a;
    let mut lp = LinearProgram::new(s_n * a_n);
    for s in 0..s_n {
        for a in 0..a_n {
            lp.set_objective(var(s, a), model.cost(0, s, a));
        }
    }
    for (i, &tau) in model.thresholds().iter().enumerate() {
        let mut terms = Vec::with_capacity(s_n * a_n);
        for s in 0..s_n {
            for a in 0..a_n {
                terms.push((var(s, a), model.cost(i + 1, s, a)));
            }
        }
        lp.add_constraint(terms, Relation::Le, tau);
    }
    for s in 0..s_n {
        let mut terms = Vec::with_capacity(s_n * a_n + a_n);
        for s2 in 0..s_n {
            for a in 0..a_n {
                let coef = if s2 == s { 1.0 } else { 0.0 } - model.transition(s2, a, s);
                if coef != 0.0 {
                    terms.push((var(s2, a), coef));
                }
            }
        }
        lp.add_constraint(terms, Relation::Eq, 0.0);
    }
    let all: Vec<(usize, f64)> = (0..s_n * a_n).map(|v| (v, 1.0)).collect();
    lp.add_constraint(all, Relation::Eq, 1.0);

    finish(lp.solve(), s_n, a_n, |x, s, a| x[var(s, a)], |mu| {
        let mut acc = 0.0;
        for s in 0..s_n {
            for a in 0..a_n {
                acc += mu[[s, a]] * model.cost(0, s, a);
            }
        }
        acc
    })
}

/// An L1 confidence set over transition kernels: all kernels whose row
/// `(s, a)` is within `radii[s, a]` of `center` in L1.
#[derive(Debug, Clone)]
pub struct ConfidenceSet {
    center: Array3<f64>,
    radii: Array2<f64>,
}

impl ConfidenceSet {
    pub fn new(center: Array3<f64>, radii: Array2<f64>) -> Result<Self, LpInputError> {
        let (s_n, a_n, s2_n) = center.dim();
        if s2_n != s_n || radii.dim() != (s_n, a_n) {
            return Err(LpInputError::Shape {
                context: format!(
                    "center is {:?}, radii is {:?}",
                    center.shape(),
                    radii.shape()
                ),
            });
        }
        for s in 0..s_n {
            for a in 0..a_n {
                let row = center.slice(ndarray::s![s, a, ..]);
                let sum: f64 = row.sum();
                if row.iter().any(|&p| !p.is_finite() || p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                    return Err(LpInputError::CenterRow { state: s, action: a });
                }
                let r = radii[[s, a]];
                if !r.is_finite() || r < 0.0 {
                    return Err(LpInputError::BadRadius { state: s, action: a });
                }
            }
        }
        Ok(Self { center, radii })
    }

    pub fn center(&self) -> ArrayView3<'_, f64> {
        self.center.view()
    }

    pub fn radii(&self) -> ArrayView2<'_, f64> {
        self.radii.view()
    }
}

/// Solves the extended LP: optimistic planning over policies and kernels in
/// the confidence set. `costs` has one `[S, A]` table per signal (index 0 is
/// the objective); `thresholds` bounds signals `1..`.
pub fn solve_extended_lp(
    set: &ConfidenceSet,
    costs: &Array3<f64>,
    thresholds: &[f64],
) -> PlanOutcome {
    let (s_n, a_n, _) = set.center.dim();
    let (signals, cs, ca) = costs.dim();
    assert_eq!((cs, ca), (s_n, a_n), "cost tables must match the kernel");
    assert_eq!(signals, thresholds.len() + 1, "one threshold per constrained signal");

    let z_idx = |s: usize, a: usize, s2: usize| (s * a_n + a) * s_n + s2;
    let n_z = s_n * a_n * s_n;

    // Rows with radius >= 2 need no ball machinery at all.
    let mut active: Vec<(usize, usize)> = Vec::new();
    for s in 0..s_n {
        for a in 0..a_n {
            if set.radii[[s, a]] < 2.0 {
                active.push((s, a));
            }
        }
    }
    let d_idx: std::collections::HashMap<(usize, usize), usize> = active
        .iter()
        .enumerate()
        .map(|(k, &(s, a))| ((s, a), n_z + k * s_n))
        .collect();

    let mut lp = LinearProgram::new(n_z + active.len() * s_n);
    for s in 0..s_n {
        for a in 0..a_n {
            let c0 = costs[[0, s, a]];
            if c0 != 0.0 {
                for s2 in 0..s_n {
                    lp.set_objective(z_idx(s, a, s2), c0);
                }
            }
        }
    }
    for (i, &tau) in thresholds.iter().enumerate() {
        let mut terms = Vec::new();
        for s in 0..s_n {
            for a in 0..a_n {
                let c = costs[[i + 1, s, a]];
                if c != 0.0 {
                    for s2 in 0..s_n {
                        terms.push((z_idx(s, a, s2), c));
                    }
                }
            }
        }
        lp.add_constraint(terms, Relation::Le, tau);
    }
    for s in 0..s_n {
        // Out-mass minus in-mass of state s; z(s, a, s) cancels via term
        // accumulation.
        let mut terms = Vec::new();
        for a in 0..a_n {
            for s2 in 0..s_n {
                terms.push((z_idx(s, a, s2), 1.0));
            }
        }
        for s2 in 0..s_n {
            for a in 0..a_n {
                terms.push((z_idx(s2, a, s), -1.0));
            }
        }
        lp.add_constraint(terms, Relation::Eq, 0.0);
    }
    let all: Vec<(usize, f64)> = (0..n_z).map(|v| (v, 1.0)).collect();
    lp.add_constraint(all, Relation::Eq, 1.0);

    for &(s, a) in &active {
        let beta = set.radii[[s, a]];
        let d_base = d_idx[&(s, a)];
        for s2 in 0..s_n {
            // z(s,a,s2) - pbar(s2|s,a) * sum_{s''} z(s,a,s'') - d+(s,a,s2) <= 0
            let pbar = set.center[[s, a, s2]];
            let mut terms = Vec::with_capacity(s_n + 1);
            for s3 in 0..s_n {
                let coef = if s3 == s2 { 1.0 - pbar } else { -pbar };
                if coef != 0.0 {
                    terms.push((z_idx(s, a, s3), coef));
                }
            }
            terms.push((d_base + s2, -1.0));
            lp.add_constraint(terms, Relation::Le, 0.0);
        }
        // 2 sum_{s2} d+(s,a,s2) <= beta * sum_{s''} z(s,a,s'')
        let mut terms = Vec::with_capacity(2 * s_n);
        for s2 in 0..s_n {
            terms.push((d_base + s2, 2.0));
            if beta != 0.0 {
                terms.push((z_idx(s, a, s2), -beta));
            }
        }
        lp.add_constraint(terms, Relation::Le, 0.0);
    }

    finish(
        lp.solve(),
        s_n,
        a_n,
        |x, s, a| (0..s_n).map(|s2| x[z_idx(s, a, s2)]).sum(),
        |mu| {
            let mut acc = 0.0;
            for s in 0..s_n {
                for a in 0..a_n {
                    acc += mu[[s, a]] * costs[[0, s, a]];
                }
            }
            acc
        },
    )
}

fn finish(
    outcome: SimplexOutcome,
    s_n: usize,
    a_n: usize,
    extract: impl Fn(&[f64], usize, usize) -> f64,
    objective_of: impl Fn(&Array2<f64>) -> f64,
) -> PlanOutcome {
    match outcome {
        SimplexOutcome::Optimal { x, .. } => {
            let mut mu = Array2::zeros((s_n, a_n));
            for s in 0..s_n {
                for a in 0..a_n {
                    mu[[s, a]] = extract(&x, s, a);
                }
            }
            let objective = objective_of(&mu);
            match OccupancyMeasure::new(mu) {
                Ok(occupancy) => PlanOutcome::Optimal {
                    occupancy,
                    objective,
                },
                Err(e) => PlanOutcome::NumericalFailure {
                    detail: format!("solver returned an invalid measure: {e}"),
                },
            }
        }
        SimplexOutcome::Infeasible { phase1_objective } => {
            PlanOutcome::Infeasible { phase1_objective }
        }
        SimplexOutcome::Unbounded => PlanOutcome::NumericalFailure {
            detail: "bounded planning LP reported unbounded".to_string(),
        },
        SimplexOutcome::IterationLimit => PlanOutcome::NumericalFailure {
            detail: "simplex iteration limit or arithmetic breakdown".to_string(),
        },
    }
}

/// Conditional action distribution of an occupancy measure; rows with no mass
/// fall back to uniform.
pub fn policy_from_occupancy(occupancy: &OccupancyMeasure) -> StationaryPolicy {
    let (s_n, a_n) = occupancy.mu.dim();
    let mut probs = Array2::zeros((s_n, a_n));
    for s in 0..s_n {
        let mass = occupancy.state_mass(s);
        if mass <= MASS_TOL {
            for a in 0..a_n {
                probs[[s, a]] = 1.0 / a_n as f64;
            }
        } else {
            for a in 0..a_n {
                probs[[s, a]] = (occupancy.mu[[s, a]] / mass).max(0.0);
            }
            // Exact renormalization after clamping.
            let row_sum: f64 = probs.row(s).sum();
            for a in 0..a_n {
                probs[[s, a]] /= row_sum;
            }
        }
    }
    StationaryPolicy::new(probs).expect("normalized rows form a policy")
}

/// Width of the per-row L1 confidence ball after `visits` observations of a
/// state-action pair, at time `t` and failure probability `delta`:
/// `sqrt(14 S ln(2 A t / delta) / max(1, visits))`.
pub fn confidence_radius(
    visits: u64,
    t: u64,
    delta: f64,
    n_states: usize,
    n_actions: usize,
) -> f64 {
    assert!(delta > 0.0 && delta < 1.0, "delta must be in (0, 1)");
    let t = t.max(1) as f64;
    let n = visits.max(1) as f64;
    (14.0 * n_states as f64 * (2.0 * n_actions as f64 * t / delta).ln() / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::evaluate_policy;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    /// Two states, two actions. Action 0 moves to the other state; action 1
    /// stays. Objective cost 1 on (s0,a0) and (s1,a1); staying at s0 is free
    /// but carries constrained cost 1.
    ///
    /// Achievable long-run pairs (J0, J1) mix: park at (s0,a1) -> (0, 1),
    /// the two-cycle on action 0 -> (0.5, 0), park at (s1,a1) -> (1, 0).
    /// With tau = 0.3 the optimum parks 0.3 at (s0,a1) and runs the cycle
    /// with the rest: J0* = 0.35, mu* = [[0.35, 0.3], [0.35, 0.0]].
    fn mixing_model() -> Cmdp {
        let p = array![
            [[0.0, 1.0], [1.0, 0.0]],
            [[1.0, 0.0], [0.0, 1.0]],
        ];
        let costs = array![
            [[1.0, 0.0], [0.0, 1.0]],
            [[0.0, 1.0], [0.0, 0.0]],
        ];
        Cmdp::new(p, costs, vec![0.3], 0).unwrap()
    }

    fn optimal(outcome: PlanOutcome) -> (OccupancyMeasure, f64) {
        match outcome {
            PlanOutcome::Optimal {
                occupancy,
                objective,
            } => (occupancy, objective),
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn hand_solved_model_matches() {
        let m = mixing_model();
        let (mu, obj) = optimal(solve_cmdp_lp(&m));
        assert_abs_diff_eq!(obj, 0.35, epsilon = 1e-7);
        assert_abs_diff_eq!(mu.mu()[[0, 0]], 0.35, epsilon = 1e-7);
        assert_abs_diff_eq!(mu.mu()[[0, 1]], 0.3, epsilon = 1e-7);
        assert_abs_diff_eq!(mu.mu()[[1, 0]], 0.35, epsilon = 1e-7);
        assert_abs_diff_eq!(mu.mu()[[1, 1]], 0.0, epsilon = 1e-7);
    }

    #[test]
    fn occupancy_invariants_hold() {
        let m = mixing_model();
        let (mu, _) = optimal(solve_cmdp_lp(&m));
        assert_abs_diff_eq!(mu.total_mass(), 1.0, epsilon = 1e-7);
        assert!(mu.flow_residual(m.transitions()) <= 1e-7);
        let c1 = m.costs().index_axis(ndarray::Axis(0), 1).to_owned();
        assert!(mu.expected_cost(c1.view()) <= 0.3 + 1e-7);
    }

    #[test]
    fn round_trip_through_policy_evaluation() {
        let m = mixing_model();
        let (mu, obj) = optimal(solve_cmdp_lp(&m));
        let policy = policy_from_occupancy(&mu);
        let eval = evaluate_policy(&m, &policy).unwrap();
        assert_abs_diff_eq!(eval.loss[0], obj, epsilon = 1e-6);
        assert!(eval.loss[1] <= 0.3 + 1e-6);
    }

    #[test]
    fn infeasible_model_is_certified() {
        // Constrained cost 1 everywhere, threshold 0.
        let p = array![[[0.5, 0.5], [1.0, 0.0]], [[0.0, 1.0], [0.3, 0.7]]];
        let c = array![
            [[0.2, 0.4], [0.9, 0.1]],
            [[1.0, 1.0], [1.0, 1.0]],
        ];
        let m = Cmdp::new(p, c, vec![0.0], 0).unwrap();
        match solve_cmdp_lp(&m) {
            PlanOutcome::Infeasible { phase1_objective } => {
                assert!(phase1_objective > FEAS_TOL);
                assert!(phase1_objective > 0.5);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn zero_mass_rows_become_uniform() {
        let mu = OccupancyMeasure::new(array![[0.6, 0.4], [0.0, 0.0]]).unwrap();
        let policy = policy_from_occupancy(&mu);
        assert_abs_diff_eq!(policy.prob(0, 0), 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(policy.prob(1, 0), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(policy.prob(1, 1), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn confidence_radius_formula_and_monotonicity() {
        // sqrt(14 * 3 * ln(2 * 2 * 100 / 0.1) / 1) = sqrt(42 ln 4000)
        let b = confidence_radius(0, 100, 0.1, 3, 2);
        assert_abs_diff_eq!(b, 18.6641, epsilon = 1e-3);
        assert_abs_diff_eq!(confidence_radius(1, 100, 0.1, 3, 2), b, epsilon = 1e-12);
        let mut prev = b;
        for n in [2u64, 5, 20, 100, 10_000] {
            let next = confidence_radius(n, 100, 0.1, 3, 2);
            assert!(next < prev);
            assert!(next >= 0.0);
            prev = next;
        }
    }

    #[test]
    fn extended_lp_with_zero_radii_matches_plain_lp() {
        let m = mixing_model();
        let (_, plain) = optimal(solve_cmdp_lp(&m));
        let set = ConfidenceSet::new(
            m.transitions().to_owned(),
            Array2::zeros((2, 2)),
        )
        .unwrap();
        let (mu, ext) = optimal(solve_extended_lp(
            &set,
            &m.costs().to_owned(),
            m.thresholds(),
        ));
        assert_abs_diff_eq!(ext, plain, epsilon = 1e-6);
        assert_abs_diff_eq!(mu.total_mass(), 1.0, epsilon = 1e-7);
    }

    #[test]
    fn extended_lp_optimism_grows_with_radius() {
        let m = mixing_model();
        let mut prev = f64::INFINITY;
        for r in [0.0, 0.2, 0.8, 2.0] {
            let set = ConfidenceSet::new(
                m.transitions().to_owned(),
                Array2::from_elem((2, 2), r),
            )
            .unwrap();
            let (_, obj) = optimal(solve_extended_lp(
                &set,
                &m.costs().to_owned(),
                m.thresholds(),
            ));
            assert!(obj <= prev + 1e-9, "objective must not increase with radius");
            prev = obj;
        }
        // A radius-2 ball contains every kernel: the planner can park all
        // spare mass on a free self-loop, paying only the constrained floor.
        assert_abs_diff_eq!(prev, 0.0, epsilon = 1e-7);
    }

    #[test]
    fn confidence_set_rejects_bad_inputs() {
        let bad_center = array![[[0.5, 0.4]], [[1.0, 0.0]]]; // first row sums to 0.9
        assert!(matches!(
            ConfidenceSet::new(bad_center, Array2::zeros((2, 1))),
            Err(LpInputError::CenterRow { state: 0, action: 0 })
        ));
        let center = array![[[1.0, 0.0]], [[0.0, 1.0]]];
        let mut radii = Array2::zeros((2, 1));
        radii[[0, 0]] = -0.1;
        assert!(matches!(
            ConfidenceSet::new(center, radii),
            Err(LpInputError::BadRadius { state: 0, action: 0 })
        ));
    }

    fn dirichletish_row(raw: &[f64]) -> Vec<f64> {
        let total: f64 = raw.iter().map(|x| x + 0.02).sum();
        raw.iter().map(|x| (x + 0.02) / total).collect()
    }

    proptest! {
        #![proptest_config(proptest::test_runner::Config::with_cases(64))]
        #[test]
        fn random_models_solve_cleanly(
            rawp in proptest::collection::vec(0.0f64..1.0, 18),
            rawc in proptest::collection::vec(0.0f64..1.0, 12),
            tau in 0.0f64..1.0,
        ) {
            let (s_n, a_n) = (3, 2);
            let mut p = Array3::zeros((s_n, a_n, s_n));
            for s in 0..s_n {
                for a in 0..a_n {
                    let row = dirichletish_row(&rawp[(s * a_n + a) * s_n..(s * a_n + a + 1) * s_n]);
                    for s2 in 0..s_n {
                        p[[s, a, s2]] = row[s2];
                    }
                }
            }
            let mut costs = Array3::zeros((2, s_n, a_n));
            for i in 0..2 {
                for s in 0..s_n {
                    for a in 0..a_n {
                        costs[[i, s, a]] = rawc[(i * s_n + s) * a_n + a % a_n];
                    }
                }
            }
            let m = Cmdp::new(p, costs, vec![tau], 0).unwrap();
            match solve_cmdp_lp(&m) {
                PlanOutcome::Optimal { occupancy, objective } => {
                    prop_assert!((occupancy.total_mass() - 1.0).abs() <= 1e-7);
                    prop_assert!(occupancy.flow_residual(m.transitions()) <= 1e-7);
                    let c1 = m.costs().index_axis(ndarray::Axis(0), 1).to_owned();
                    prop_assert!(occupancy.expected_cost(c1.view()) <= tau + 1e-7);
                    let c0 = m.costs().index_axis(ndarray::Axis(0), 0).to_owned();
                    prop_assert!((occupancy.expected_cost(c0.view()) - objective).abs() <= 1e-9);
                }
                PlanOutcome::Infeasible { phase1_objective } => {
                    prop_assert!(phase1_objective > FEAS_TOL);
                }
                PlanOutcome::NumericalFailure { detail } => {
                    prop_assert!(false, "unexpected numerical failure: {detail}");
                }
            }
        }
    }
}
