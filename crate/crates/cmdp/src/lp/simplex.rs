//! Two-phase primal simplex on a dense tableau.
//!
//! Built for the planners in this crate: problems are dense, small to
//! moderate (up to a few thousand rows/columns), and the caller needs a
//! clean separation between "proved infeasible" (phase 1 finished with a
//! positive optimum — the certificate) and "gave up" (iteration cap or
//! numeric breakdown). Minimization throughout; variables are nonnegative.
//!
//! Mechanics: right-hand sides are normalized nonnegative (flipping the
//! relation when a row is negated), `<=` rows get slack variables that seed
//! the basis, `>=`/`=` rows get artificials. Phase 1 minimizes the artificial
//! sum; a positive optimum certifies infeasibility. Basic artificials left at
//! zero are pivoted out where possible; a row with no eligible pivot is
//! redundant and stays inert (its artificial never re-enters — artificial
//! columns are barred from entering in both phases). Pricing is Dantzig's
//! rule, switching to Bland's after a run of degenerate pivots so cycling
//! cannot persist.

/// Phase-1 optima above this value certify infeasibility; constraint
/// satisfaction is promised to the same tolerance.
pub const FEAS_TOL: f64 = 1e-7;
/// Reduced costs must beat this to enter the basis.
const ENTER_TOL: f64 = 1e-9;
/// Minimum acceptable pivot magnitude.
const PIVOT_TOL: f64 = 1e-9;
/// Row updates skip rows whose entering-column entry is below this.
const ZERO_SKIP: f64 = 1e-11;
/// Ratio-test steps below this count as degenerate.
const DEGEN_TOL: f64 = 1e-10;
/// Headroom each row gets in the ratio test; rows may dip this far below
/// zero in exchange for the freedom to pick a well-scaled pivot.
const FEAS_SLACK: f64 = 1e-9;
/// Residual against the pristine rows that triggers basis refactorization.
const REFINE_TRIGGER: f64 = 1e-9;
/// Residual the final solution may not exceed; beyond it the run is junk.
const HARD_RESIDUAL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    /// `(variable, coefficient)` pairs; repeated variables accumulate.
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A minimization LP over nonnegative variables.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    n_vars: usize,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

#[derive(Debug, Clone)]
pub enum SimplexOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    /// Phase 1 finished with artificial mass `phase1_objective > FEAS_TOL`.
    Infeasible { phase1_objective: f64 },
    Unbounded,
    /// Iteration cap hit or arithmetic broke down; no verdict.
    IterationLimit,
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        assert!(n_vars > 0, "LP needs at least one variable");
        Self {
            n_vars,
            objective: vec![0.0; n_vars],
            constraints: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        debug_assert!(terms.iter().all(|&(v, _)| v < self.n_vars));
        self.constraints.push(Constraint {
            terms,
            relation,
            rhs,
        });
    }

    /// Maximum constraint violation of a candidate point (0 when feasible);
    /// negativity counts as violation.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for &xi in x {
            worst = worst.max(-xi);
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(v, w)| w * x[v]).sum();
            let gap = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        worst
    }

    pub fn solve(&self) -> SimplexOutcome {
        Tableau::build(self).run()
    }
}

struct Tableau {
    w: usize,         // row stride; rhs lives at column w - 1
    rows: usize,
    n_struct: usize,
    art_start: usize, // first artificial column; entering is barred from here on
    objective: Vec<f64>,
    data: Vec<f64>,
    orig: Vec<f64>,   // pristine copy of `data`, for residual checks and refinement
    cost: Vec<f64>,   // reduced-cost row; cost[w - 1] holds minus the objective
    basis: Vec<usize>,
    scratch: Vec<f64>,
    bland: bool,
    degen_run: usize,
    max_iter: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        // Normalize rows to nonnegative rhs, counting auxiliary columns.
        let mut rows: Vec<(Vec<(usize, f64)>, Relation, f64)> =
            Vec::with_capacity(lp.constraints.len());
        let mut n_slack = 0;
        let mut n_art = 0;
        for c in &lp.constraints {
            let (terms, relation, rhs) = if c.rhs < 0.0 {
                let flipped = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (
                    c.terms.iter().map(|&(v, w)| (v, -w)).collect(),
                    flipped,
                    -c.rhs,
                )
            } else {
                (c.terms.clone(), c.relation, c.rhs)
            };
            match relation {
                Relation::Le => n_slack += 1,
                Relation::Ge => {
                    n_slack += 1;
                    n_art += 1;
                }
                Relation::Eq => n_art += 1,
            }
            rows.push((terms, relation, rhs));
        }

        let n_struct = lp.n_vars;
        let art_start = n_struct + n_slack;
        let n_total = art_start + n_art;
        let w = n_total + 1;
        let m = rows.len();
        let mut data = vec![0.0; m * w];
        let mut basis = vec![usize::MAX; m];
        let mut next_slack = n_struct;
        let mut next_art = art_start;

        for (r, (terms, relation, rhs)) in rows.iter().enumerate() {
            let row = &mut data[r * w..(r + 1) * w];
            for &(v, coef) in terms {
                row[v] += coef;
            }
            row[w - 1] = *rhs;
            match relation {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis[r] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis[r] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis[r] = next_art;
                    next_art += 1;
                }
            }
        }

        let max_iter = 2000 + 12 * (m + n_total);
        Self {
            w,
            rows: m,
            n_struct,
            art_start,
            objective: lp.objective.clone(),
            orig: data.clone(),
            data,
            cost: vec![0.0; w],
            basis,
            scratch: vec![0.0; w],
            bland: false,
            degen_run: 0,
            max_iter,
        }
    }

    fn run(mut self) -> SimplexOutcome {
        let has_artificials = self.basis.iter().any(|&b| b >= self.art_start);
        if has_artificials {
            // Phase 1: minimize the artificial sum.
            for c in self.cost.iter_mut() {
                *c = 0.0;
            }
            for j in self.art_start..self.w - 1 {
                self.cost[j] = 1.0;
            }
            for r in 0..self.rows {
                if self.basis[r] >= self.art_start {
                    self.subtract_row_from_cost(r, 1.0);
                }
            }
            match self.iterate() {
                LoopEnd::Converged => {}
                // Phase 1 is bounded below by zero; "unbounded" is numeric junk.
                LoopEnd::Unbounded | LoopEnd::GaveUp => return SimplexOutcome::IterationLimit,
            }
            let mut phase1_objective = -self.cost[self.w - 1];
            if !phase1_objective.is_finite() {
                return SimplexOutcome::IterationLimit;
            }
            if phase1_objective > FEAS_TOL {
                // Don't certify off a drifted cost row: recompute the
                // artificial mass from the exact basic solution first.
                let full = self.exact_solution();
                let exact: f64 = full[self.art_start..].iter().map(|&v| v.max(0.0)).sum();
                if exact.is_finite() {
                    phase1_objective = exact;
                }
                if phase1_objective > FEAS_TOL {
                    return SimplexOutcome::Infeasible { phase1_objective };
                }
            }
            self.evict_artificials();
        }

        // Phase 2 reduced costs from the true objective. Any artificial still
        // basic sits in an inert all-zero row and contributes nothing.
        for c in self.cost.iter_mut() {
            *c = 0.0;
        }
        for j in 0..self.n_struct {
            self.cost[j] = self.objective[j];
        }
        for r in 0..self.rows {
            let b = self.basis[r];
            if b < self.n_struct && self.objective[b] != 0.0 {
                self.subtract_row_from_cost(r, self.objective[b]);
            }
        }
        self.bland = false;
        self.degen_run = 0;

        match self.iterate() {
            LoopEnd::Converged => {}
            LoopEnd::Unbounded => return SimplexOutcome::Unbounded,
            LoopEnd::GaveUp => return SimplexOutcome::IterationLimit,
        }

        // The tableau accumulates roundoff over many pivots (ill-conditioned
        // bases from near-deterministic kernels are the usual source), and
        // drift can even walk the basis itself slightly primal-infeasible.
        // When the exact solution for the final basis is off, rebuild the
        // tableau exactly, clear negative rhs entries by dual pivots, and
        // finish whatever primal work the drifted cost row cut short.
        let mut full = self.exact_solution();
        let drifted = full.iter().any(|&v| !(v >= -1e-9)) || self.residual(&full) > REFINE_TRIGGER;
        if drifted {
            if !self.refresh_from_basis() || !self.dual_repair() {
                return SimplexOutcome::IterationLimit;
            }
            match self.iterate() {
                LoopEnd::Converged => {}
                LoopEnd::Unbounded => return SimplexOutcome::Unbounded,
                LoopEnd::GaveUp => return SimplexOutcome::IterationLimit,
            }
            full = self.exact_solution();
        }
        if self.residual(&full) > HARD_RESIDUAL || full.iter().any(|v| !v.is_finite()) {
            return SimplexOutcome::IterationLimit;
        }
        // Feasibility of the real problem: variables nonnegative, artificials
        // at zero. Degenerate bases legitimately sit a hair below zero.
        if full.iter().any(|&v| v < -1e-6) {
            return SimplexOutcome::IterationLimit;
        }
        if full[self.art_start..].iter().any(|&v| v.abs() > 1e-6) {
            return SimplexOutcome::IterationLimit;
        }
        let x: Vec<f64> = full[..self.n_struct].iter().map(|&v| v.max(0.0)).collect();
        let objective: f64 = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        if !objective.is_finite() {
            return SimplexOutcome::IterationLimit;
        }
        SimplexOutcome::Optimal { x, objective }
    }

    /// Values of all variables under the current basis, read off the tableau.
    fn basic_solution(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.w - 1];
        for r in 0..self.rows {
            x[self.basis[r]] = self.data[r * self.w + self.w - 1];
        }
        x
    }

    /// Basic solution, upgraded to a fresh factorization of the basis when
    /// the tableau's rhs column has drifted off the pristine rows.
    fn exact_solution(&self) -> Vec<f64> {
        let mut full = self.basic_solution();
        if self.residual(&full) > REFINE_TRIGGER {
            if let Some(refined) = self.refactorized_solution() {
                if self.residual(&refined) < self.residual(&full) {
                    full = refined;
                }
            }
        }
        full
    }

    /// Rebuilds the whole tableau exactly for the current basis: every
    /// column and the rhs become `B^-1 [A | b]` off the pristine rows, and
    /// the reduced-cost row is recomputed from the phase-2 objective.
    /// Returns false when the basis matrix cannot be factored.
    fn refresh_from_basis(&mut self) -> bool {
        let m = self.rows;
        let mut bmat = ndarray::Array2::zeros((m, m));
        for (i, &b) in self.basis.iter().enumerate() {
            for r in 0..m {
                bmat[[r, i]] = self.orig[r * self.w + b];
            }
        }
        let mut cols = ndarray::Array2::zeros((m, self.w));
        for r in 0..m {
            for j in 0..self.w {
                cols[[r, j]] = self.orig[r * self.w + j];
            }
        }
        let Ok(fresh) = crate::linalg::solve_columns(&bmat, &cols) else {
            return false;
        };
        for r in 0..m {
            for j in 0..self.w {
                self.data[r * self.w + j] = fresh[[r, j]];
            }
        }
        for c in self.cost.iter_mut() {
            *c = 0.0;
        }
        for j in 0..self.n_struct {
            self.cost[j] = self.objective[j];
        }
        for r in 0..m {
            let b = self.basis[r];
            if b < self.n_struct && self.objective[b] != 0.0 {
                self.subtract_row_from_cost(r, self.objective[b]);
            }
        }
        true
    }

    /// Drives drift-negative rhs entries out of a refreshed tableau by dual
    /// pivots. Reduced costs are nonnegative on entry (primal iteration
    /// converged) and each step's min-ratio choice keeps them so; when every
    /// rhs is nonnegative again the basis is optimal. Returns false if a
    /// negative row has no admissible pivot or the loop fails to settle.
    fn dual_repair(&mut self) -> bool {
        for _ in 0..50 + self.rows {
            let mut leave = None;
            let mut worst = -1e-11;
            for r in 0..self.rows {
                let v = self.data[r * self.w + self.w - 1];
                if v < worst {
                    worst = v;
                    leave = Some(r);
                }
            }
            let Some(r) = leave else {
                return true;
            };
            let off = r * self.w;
            let mut enter = None;
            let mut best_ratio = f64::INFINITY;
            let mut best_mag = 0.0;
            for j in 0..self.art_start {
                let a = self.data[off + j];
                if a >= -PIVOT_TOL {
                    continue;
                }
                let ratio = self.cost[j].max(0.0) / -a;
                let better = ratio < best_ratio - 1e-12
                    || (ratio <= best_ratio + 1e-12 && -a > best_mag);
                if better {
                    best_ratio = ratio;
                    best_mag = -a;
                    enter = Some(j);
                }
            }
            let Some(j) = enter else {
                return false;
            };
            self.pivot(r, j);
        }
        false
    }

    /// Worst violation of the pristine rows by `x` (artificials included, so
    /// inert redundant rows stay consistent).
    fn residual(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            let off = r * self.w;
            let row = &self.orig[off..off + self.w];
            let mut acc = 0.0;
            for (j, &coef) in row[..self.w - 1].iter().enumerate() {
                acc += coef * x[j];
            }
            worst = worst.max((acc - row[self.w - 1]).abs());
        }
        worst
    }

    /// Re-solves `B x_B = b` from the pristine columns of the final basis.
    fn refactorized_solution(&self) -> Option<Vec<f64>> {
        let n = self.rows;
        let mut bmat = ndarray::Array2::zeros((n, n));
        for (i, &b) in self.basis.iter().enumerate() {
            for r in 0..n {
                bmat[[r, i]] = self.orig[r * self.w + b];
            }
        }
        let rhs = ndarray::Array1::from_shape_fn(n, |r| self.orig[r * self.w + self.w - 1]);
        let xb = crate::linalg::solve(&bmat, &rhs).ok()?;
        let mut x = vec![0.0; self.w - 1];
        for (i, &b) in self.basis.iter().enumerate() {
            x[b] = xb[i];
        }
        Some(x)
    }

    fn subtract_row_from_cost(&mut self, r: usize, factor: f64) {
        let off = r * self.w;
        let row = &self.data[off..off + self.w];
        for (c, &v) in self.cost.iter_mut().zip(row.iter()) {
            *c -= factor * v;
        }
    }

    fn evict_artificials(&mut self) {
        for r in 0..self.rows {
            if self.basis[r] < self.art_start {
                continue;
            }
            let row_off = r * self.w;
            let mut pivot_col = None;
            let mut pivot_mag = PIVOT_TOL;
            for j in 0..self.art_start {
                let mag = self.data[row_off + j].abs();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_col = Some(j);
                }
            }
            match pivot_col {
                Some(j) => self.pivot(r, j),
                None => {
                    // Redundant row: flush residue so it can never interfere.
                    for j in 0..self.art_start {
                        self.data[row_off + j] = 0.0;
                    }
                    self.data[row_off + self.w - 1] = 0.0;
                }
            }
        }
    }

    fn iterate(&mut self) -> LoopEnd {
        for _ in 0..self.max_iter {
            if !self.cost[self.w - 1].is_finite() {
                return LoopEnd::GaveUp;
            }
            let entering = if self.bland {
                (0..self.art_start).find(|&j| self.cost[j] < -ENTER_TOL)
            } else {
                let mut best = None;
                let mut best_val = -ENTER_TOL;
                for j in 0..self.art_start {
                    if self.cost[j] < best_val {
                        best_val = self.cost[j];
                        best = Some(j);
                    }
                }
                best
            };
            let Some(e) = entering else {
                return LoopEnd::Converged;
            };

            // Two-pass ratio test. Pass 1 bounds the step by the tightest
            // row after granting each one FEAS_SLACK of headroom; pass 2
            // picks the best-scaled pivot among the rows that block within
            // that bound. Every positive entry participates — a row whose
            // entry is small still blocks, otherwise a long step would march
            // its rhs far below zero. Bland mode instead takes the lowest
            // basis index among exact minimum-ratio rows so its termination
            // argument stands.
            let mut theta_bound = f64::INFINITY;
            let mut theta_min = f64::INFINITY;
            for r in 0..self.rows {
                let a = self.data[r * self.w + e];
                if a <= ZERO_SKIP {
                    continue;
                }
                let rhs = self.data[r * self.w + self.w - 1];
                // A row that has drifted slightly negative blocks at zero —
                // the step stays forward and the pivot ejects the stray row.
                theta_bound = theta_bound.min(((rhs + FEAS_SLACK) / a).max(0.0));
                theta_min = theta_min.min((rhs / a).max(0.0));
            }
            if theta_bound == f64::INFINITY {
                return LoopEnd::Unbounded;
            }
            let mut leave: Option<usize> = None;
            let mut best_key = f64::NEG_INFINITY; // pivot magnitude (Dantzig) or -basis index (Bland)
            for r in 0..self.rows {
                let a = self.data[r * self.w + e];
                if a <= ZERO_SKIP {
                    continue;
                }
                let theta = self.data[r * self.w + self.w - 1] / a;
                let blocks = if self.bland {
                    theta <= theta_min + 1e-12
                } else {
                    theta <= theta_bound
                };
                if blocks {
                    let key = self.tie_key(r, a);
                    if key > best_key {
                        leave = Some(r);
                        best_key = key;
                    }
                }
            }
            let r = leave.expect("a row attained the bounding ratio");
            let best_theta = theta_min.max(0.0);

            if best_theta < DEGEN_TOL {
                self.degen_run += 1;
                if self.degen_run > self.rows + 50 {
                    self.bland = true;
                }
            } else {
                self.degen_run = 0;
            }
            self.pivot(r, e);
        }
        LoopEnd::GaveUp
    }

    fn tie_key(&self, r: usize, pivot: f64) -> f64 {
        if self.bland {
            -(self.basis[r] as f64)
        } else {
            pivot
        }
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.w;
        let row_off = r * w;
        let inv = 1.0 / self.data[row_off + e];
        for j in 0..w {
            self.data[row_off + j] *= inv;
        }
        self.data[row_off + e] = 1.0;
        self.scratch.copy_from_slice(&self.data[row_off..row_off + w]);

        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let off = i * w;
            let f = self.data[off + e];
            if f.abs() <= ZERO_SKIP {
                continue;
            }
            let row = &mut self.data[off..off + w];
            for (x, &p) in row.iter_mut().zip(self.scratch.iter()) {
                *x -= f * p;
            }
            row[e] = 0.0;
        }
        let f = self.cost[e];
        if f.abs() > ZERO_SKIP {
            for (c, &p) in self.cost.iter_mut().zip(self.scratch.iter()) {
                *c -= f * p;
            }
        }
        self.cost[e] = 0.0;
        self.basis[r] = e;
    }
}

enum LoopEnd {
    Converged,
    Unbounded,
    GaveUp,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn optimal(outcome: SimplexOutcome) -> (Vec<f64>, f64) {
        match outcome {
            SimplexOutcome::Optimal { x, objective } => (x, objective),
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn maximizes_over_a_simplex_face() {
        // min -x - y  s.t.  x + y <= 1
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, -1.0);
        lp.set_objective(1, -1.0);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Le, 1.0);
        let (x, obj) = optimal(lp.solve());
        assert_abs_diff_eq!(obj, -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(x[0] + x[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn lower_bound_via_ge_row() {
        // min x  s.t.  x >= 3, x <= 10
        let mut lp = LinearProgram::new(1);
        lp.set_objective(0, 1.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Ge, 3.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 10.0);
        let (x, obj) = optimal(lp.solve());
        assert_abs_diff_eq!(x[0], 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(obj, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn equality_with_upper_bound() {
        // min y  s.t.  x + y = 2, x <= 1.5
        let mut lp = LinearProgram::new(2);
        lp.set_objective(1, 1.0);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 2.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 1.5);
        let (x, obj) = optimal(lp.solve());
        assert_abs_diff_eq!(x[0], 1.5, epsilon = 1e-9);
        assert_abs_diff_eq!(x[1], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(obj, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn negative_rhs_rows_are_normalized() {
        // -x - y <= -1 is x + y >= 1
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, 1.0);
        lp.set_objective(1, 1.0);
        lp.add_constraint(vec![(0, -1.0), (1, -1.0)], Relation::Le, -1.0);
        let (_, obj) = optimal(lp.solve());
        assert_abs_diff_eq!(obj, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn infeasibility_is_certified_by_phase_one() {
        // x <= 1 and x >= 2 cannot both hold.
        let mut lp = LinearProgram::new(1);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 1.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Ge, 2.0);
        match lp.solve() {
            SimplexOutcome::Infeasible { phase1_objective } => {
                assert!(phase1_objective > FEAS_TOL);
                assert!(phase1_objective > 0.5); // the gap is a full unit
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn unbounded_is_detected() {
        let mut lp = LinearProgram::new(1);
        lp.set_objective(0, -1.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Ge, 0.0);
        assert!(matches!(lp.solve(), SimplexOutcome::Unbounded));
    }

    #[test]
    fn redundant_equality_rows_are_tolerated() {
        // x + y = 1 stated twice (scaled); min x.
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, 1.0);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.add_constraint(vec![(0, 2.0), (1, 2.0)], Relation::Eq, 2.0);
        let (x, obj) = optimal(lp.solve());
        assert_abs_diff_eq!(obj, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn repeated_terms_accumulate() {
        // (x + x) <= 1  =>  x <= 0.5
        let mut lp = LinearProgram::new(1);
        lp.set_objective(0, -1.0);
        lp.add_constraint(vec![(0, 1.0), (0, 1.0)], Relation::Le, 1.0);
        let (x, _) = optimal(lp.solve());
        assert_abs_diff_eq!(x[0], 0.5, epsilon = 1e-9);
    }

    /// Brute-force reference for tiny 2-variable LPs: enumerate candidate
    /// vertices from all pairs of tight constraints (including axes) and pick
    /// the feasible minimum.
    fn brute_force_2d(
        constraints: &[(f64, f64, f64)], // a x + b y <= c
        obj: (f64, f64),
    ) -> Option<f64> {
        let mut lines: Vec<(f64, f64, f64)> = constraints.to_vec();
        lines.push((1.0, 0.0, 0.0)); // x >= 0 as -x <= 0 handled via tightness below
        lines.push((0.0, 1.0, 0.0));
        let mut candidates: Vec<(f64, f64)> = Vec::new();
        let n = lines.len();
        for i in 0..n {
            for j in i + 1..n {
                let (a1, b1, c1) = lines[i];
                let (a2, b2, c2) = lines[j];
                // Tight versions: axis rows mean x = 0 / y = 0.
                let (a1, b1, c1) = if i >= constraints.len() { (a1, b1, 0.0) } else { (a1, b1, c1) };
                let (a2, b2, c2) = if j >= constraints.len() { (a2, b2, 0.0) } else { (a2, b2, c2) };
                let det = a1 * b2 - a2 * b1;
                if det.abs() < 1e-12 {
                    continue;
                }
                let x = (c1 * b2 - c2 * b1) / det;
                let y = (a1 * c2 - a2 * c1) / det;
                candidates.push((x, y));
            }
        }
        let feasible = |x: f64, y: f64| {
            x >= -1e-9
                && y >= -1e-9
                && constraints.iter().all(|&(a, b, c)| a * x + b * y <= c + 1e-9)
        };
        candidates
            .into_iter()
            .filter(|&(x, y)| feasible(x, y))
            .map(|(x, y)| obj.0 * x + obj.1 * y)
            .min_by(f64::total_cmp)
    }

    proptest! {
        #[test]
        fn matches_brute_force_on_random_2d_problems(
            rows in proptest::collection::vec((0.1f64..2.0, 0.1f64..2.0, 0.5f64..3.0), 1..4),
            o1 in -2.0f64..2.0,
            o2 in -2.0f64..2.0,
        ) {
            // All rows have positive coefficients and positive rhs, so the
            // region is a bounded polytope containing the origin.
            let mut lp = LinearProgram::new(2);
            lp.set_objective(0, o1);
            lp.set_objective(1, o2);
            for &(a, b, c) in &rows {
                lp.add_constraint(vec![(0, a), (1, b)], Relation::Le, c);
            }
            let (x, obj) = optimal(lp.solve());
            prop_assert!(lp.violation(&x) <= 1e-7);
            let reference = brute_force_2d(&rows, (o1, o2)).unwrap();
            prop_assert!((obj - reference).abs() <= 1e-6);
        }

        #[test]
        fn optimal_points_satisfy_constraints(
            rows in proptest::collection::vec((0.0f64..2.0, 0.0f64..2.0, 0.5f64..3.0), 1..5),
            o1 in 0.0f64..2.0,
            o2 in 0.0f64..2.0,
        ) {
            let mut lp = LinearProgram::new(2);
            lp.set_objective(0, o1);
            lp.set_objective(1, o2);
            for &(a, b, c) in &rows {
                lp.add_constraint(vec![(0, a), (1, b)], Relation::Le, c);
            }
            if let SimplexOutcome::Optimal { x, .. } = lp.solve() {
                prop_assert!(lp.violation(&x) <= 1e-7);
            } else {
                prop_assert!(false, "bounded feasible LP must solve");
            }
        }
    }
}
