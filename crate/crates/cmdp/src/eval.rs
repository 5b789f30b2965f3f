//! Exact average-cost evaluation of stationary policies.
//!
//! For a policy pi on a CMDP, the induced chain `P_pi` and cost vectors
//! `c_pi` determine the long-run average loss `J_i = q . c_pi_i` (with `q`
//! the stationary distribution) and the bias `v_i`, the solution of the
//! Poisson equation `v + J 1 = c_pi + P_pi v` normalized so `min_s v(s) = 0`.
//!
//! Numerical scheme:
//!
//! - The stationary distribution is solved from `((P'^T - I) with one row
//!   replaced by ones) q = e_row`, where `P' = (P + I) / 2`. The lazy damping
//!   removes periodicity without changing `q`; the replaced row is valid
//!   because the rows of `P'^T - I` sum to zero. The system is nonsingular
//!   exactly when the chain is unichain, so a singular factorization is
//!   reported as [`EvalError::NonUnichain`].
//! - The bias is solved from the undamped `(I - P_pi) v = c_pi - J 1` with the
//!   row of the most visited state (argmax `q`) replaced by a pin `v(s*) = 0`,
//!   then shifted to min zero.
//!
//! By default a multichain induced kernel is an error. With
//! [`EvalOptions::cesaro_fallback`] the chain is first restricted to the
//! states reachable from the model's initial state (that set is closed, so
//! rows stay stochastic) and evaluated there, matching the Cesaro limit from
//! the initial state; unreachable states get zero stationary mass and zero
//! bias. The error remains only if the restriction itself is multichain.

use crate::linalg::{self, LinalgError};
use crate::model::{Cmdp, StationaryPolicy};
use ndarray::{Array1, Array2};
use thiserror::Error;

/// Edges below this probability are treated as absent in reachability and
/// periodicity checks.
const EDGE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("induced chain is not unichain to working precision")]
    NonUnichain,
    #[error("induced chain must be irreducible and aperiodic ({context})")]
    NotErgodic { context: &'static str },
    #[error("numerical failure: {0}")]
    Numerical(LinalgError),
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    #[error("cost tables for signal {signal} differ between the two models")]
    CostMismatch { signal: usize },
}

fn map_lin(e: LinalgError) -> EvalError {
    match e {
        LinalgError::Singular { .. } => EvalError::NonUnichain,
        other => EvalError::Numerical(other),
    }
}

/// Exact evaluation of one policy: per-signal losses, min-normalized biases
/// (one row per cost signal) and the stationary distribution.
#[derive(Debug, Clone)]
pub struct PolicyEvaluation {
    pub loss: Vec<f64>,
    pub bias: Array2<f64>,
    pub stationary: Array1<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    /// Evaluate the chain restricted to states reachable from the initial
    /// state instead of failing on multichain kernels.
    pub cesaro_fallback: bool,
}

/// The state-to-state kernel `P_pi(s, s') = sum_a pi(a|s) p(s'|s, a)`.
pub fn induced_chain(model: &Cmdp, policy: &StationaryPolicy) -> Result<Array2<f64>, EvalError> {
    check_dims(model, policy)?;
    let (s_n, a_n) = (model.n_states(), model.n_actions());
    let mut p = Array2::zeros((s_n, s_n));
    for s in 0..s_n {
        for a in 0..a_n {
            let w = policy.prob(s, a);
            if w == 0.0 {
                continue;
            }
            for s2 in 0..s_n {
                p[[s, s2]] += w * model.transition(s, a, s2);
            }
        }
    }
    Ok(p)
}

/// The state cost vector `c_pi(s) = sum_a pi(a|s) c_i(s, a)` for one signal.
pub fn induced_cost(
    model: &Cmdp,
    policy: &StationaryPolicy,
    signal: usize,
) -> Result<Array1<f64>, EvalError> {
    check_dims(model, policy)?;
    let (s_n, a_n) = (model.n_states(), model.n_actions());
    let mut c = Array1::zeros(s_n);
    for s in 0..s_n {
        for a in 0..a_n {
            c[s] += policy.prob(s, a) * model.cost(signal, s, a);
        }
    }
    Ok(c)
}

pub fn evaluate_policy(
    model: &Cmdp,
    policy: &StationaryPolicy,
) -> Result<PolicyEvaluation, EvalError> {
    evaluate_policy_with(model, policy, EvalOptions::default())
}

pub fn evaluate_policy_with(
    model: &Cmdp,
    policy: &StationaryPolicy,
    options: EvalOptions,
) -> Result<PolicyEvaluation, EvalError> {
    let p_full = induced_chain(model, policy)?;
    let s_n = model.n_states();
    let signals = model.n_constraints() + 1;

    let scope: Vec<usize> = if options.cesaro_fallback {
        reachable_from(&p_full, model.initial_state())
    } else {
        (0..s_n).collect()
    };
    let p_sub = restrict(&p_full, &scope);

    let q_sub = stationary_distribution(&p_sub)?;

    let mut loss = Vec::with_capacity(signals);
    let mut bias = Array2::zeros((signals, s_n));
    let mut stationary = Array1::zeros(s_n);
    for (k, &s) in scope.iter().enumerate() {
        stationary[s] = q_sub[k];
    }
    for i in 0..signals {
        let c_full = induced_cost(model, policy, i)?;
        let c_sub = Array1::from_iter(scope.iter().map(|&s| c_full[s]));
        let j = q_sub.dot(&c_sub);
        let v_sub = bias_vector(&p_sub, &q_sub, &c_sub, j)?;
        for (k, &s) in scope.iter().enumerate() {
            bias[[i, s]] = v_sub[k];
        }
        loss.push(j);
    }
    Ok(PolicyEvaluation {
        loss,
        bias,
        stationary,
    })
}

/// Stationary distribution of a row-stochastic kernel; errors with
/// [`EvalError::NonUnichain`] when it is not unique.
pub fn stationary_distribution(p: &Array2<f64>) -> Result<Array1<f64>, EvalError> {
    let n = p.dim().0;
    assert_eq!(p.dim().1, n, "kernel must be square");
    // a = (P' ^ T - I) with the last row replaced by ones, P' = (P + I) / 2.
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            a[[i, j]] = 0.5 * p[[j, i]] + if i == j { 0.5 - 1.0 } else { 0.0 };
        }
    }
    let mut b = Array1::zeros(n);
    for j in 0..n {
        a[[n - 1, j]] = 1.0;
    }
    b[n - 1] = 1.0;
    let mut q = linalg::solve(&a, &b).map_err(map_lin)?;
    let mut total = 0.0;
    for x in q.iter_mut() {
        if *x < -1e-8 {
            return Err(EvalError::NonUnichain);
        }
        if *x < 0.0 {
            *x = 0.0;
        }
        total += *x;
    }
    if !(total.is_finite()) || (total - 1.0).abs() > 1e-6 {
        return Err(EvalError::NonUnichain);
    }
    q.mapv_inplace(|x| x / total);
    Ok(q)
}

fn bias_vector(
    p: &Array2<f64>,
    q: &Array1<f64>,
    c: &Array1<f64>,
    j: f64,
) -> Result<Array1<f64>, EvalError> {
    let n = p.dim().0;
    let pin = q
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut a = Array2::zeros((n, n));
    let mut b = Array1::zeros(n);
    for i in 0..n {
        if i == pin {
            a[[i, i]] = 1.0;
            continue;
        }
        for k in 0..n {
            a[[i, k]] = if i == k { 1.0 } else { 0.0 } - p[[i, k]];
        }
        b[i] = c[i] - j;
    }
    let mut v = linalg::solve(&a, &b).map_err(map_lin)?;
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    v.mapv_inplace(|x| x - min);
    Ok(v)
}

/// Largest expected first-passage time over ordered state pairs of the
/// induced chain. Finite for every policy exactly when the chain stays
/// communicating; a state that cannot reach the target makes the first-passage
/// system singular, reported as [`EvalError::NonUnichain`].
pub fn estimate_hitting_time(model: &Cmdp, policy: &StationaryPolicy) -> Result<f64, EvalError> {
    let p = induced_chain(model, policy)?;
    max_first_passage(&p)
}

/// See [`estimate_hitting_time`]; operates directly on a chain.
pub fn max_first_passage(p: &Array2<f64>) -> Result<f64, EvalError> {
    let n = p.dim().0;
    let mut worst: f64 = 0.0;
    for target in 0..n {
        let others: Vec<usize> = (0..n).filter(|&s| s != target).collect();
        if others.is_empty() {
            continue;
        }
        let m = others.len();
        let mut a = Array2::zeros((m, m));
        let mut b = Array1::zeros(m);
        for (i, &s) in others.iter().enumerate() {
            for (k, &s2) in others.iter().enumerate() {
                a[[i, k]] = if i == k { 1.0 } else { 0.0 } - p[[s, s2]];
            }
            b[i] = 1.0;
        }
        let h = linalg::solve(&a, &b).map_err(map_lin)?;
        for &x in h.iter() {
            if x < -1e-8 {
                return Err(EvalError::NonUnichain);
            }
            worst = worst.max(x);
        }
    }
    Ok(worst)
}

/// Chain-structure diagnostics for a policy on a model.
#[derive(Debug, Clone, Copy)]
pub struct Diagnostics {
    /// Largest bias span over all cost signals (biases are min-normalized, so
    /// this is the largest bias entry).
    pub span: f64,
    /// Largest expected first-passage time over ordered state pairs.
    pub hitting_time: f64,
}

pub fn diagnostics(model: &Cmdp, policy: &StationaryPolicy) -> Result<Diagnostics, EvalError> {
    let eval = evaluate_policy(model, policy)?;
    let span = eval.bias.iter().copied().fold(0.0f64, f64::max);
    let hitting_time = estimate_hitting_time(model, policy)?;
    Ok(Diagnostics { span, hitting_time })
}

/// Exact loss gap and a bias-based bound for a kernel perturbation.
#[derive(Debug, Clone, Copy)]
pub struct PerturbationReport {
    /// `J_b - J_a` for the chosen signal.
    pub gap: f64,
    /// `max_s bias_a(s) * max_{s,a} |p_b(.|s,a) - p_a(.|s,a)|_1`, an upper
    /// bound on `|gap|`.
    pub bound: f64,
    /// The largest L1 row distance between the two kernels.
    pub max_row_l1: f64,
}

/// Compares one cost signal's average loss under two kernels for the same
/// policy. Requires both induced chains to be irreducible and aperiodic, and
/// the two models to share the signal's cost table.
pub fn loss_perturbation_gap(
    model_a: &Cmdp,
    model_b: &Cmdp,
    policy: &StationaryPolicy,
    signal: usize,
) -> Result<PerturbationReport, EvalError> {
    if model_a.n_states() != model_b.n_states() || model_a.n_actions() != model_b.n_actions() {
        return Err(EvalError::DimensionMismatch {
            context: format!(
                "models are {}x{} and {}x{}",
                model_a.n_states(),
                model_a.n_actions(),
                model_b.n_states(),
                model_b.n_actions()
            ),
        });
    }
    if signal > model_a.n_constraints() || signal > model_b.n_constraints() {
        return Err(EvalError::DimensionMismatch {
            context: format!("signal {signal} out of range"),
        });
    }
    let (s_n, a_n) = (model_a.n_states(), model_a.n_actions());
    for s in 0..s_n {
        for a in 0..a_n {
            if (model_a.cost(signal, s, a) - model_b.cost(signal, s, a)).abs() > 1e-12 {
                return Err(EvalError::CostMismatch { signal });
            }
        }
    }
    for (m, label) in [(model_a, "first"), (model_b, "second")] {
        let p = induced_chain(m, policy)?;
        if !is_irreducible(&p) {
            return Err(EvalError::NotErgodic {
                context: match label {
                    "first" => "first chain is not irreducible",
                    _ => "second chain is not irreducible",
                },
            });
        }
        if !is_aperiodic(&p) {
            return Err(EvalError::NotErgodic {
                context: match label {
                    "first" => "first chain is periodic",
                    _ => "second chain is periodic",
                },
            });
        }
    }
    let eval_a = evaluate_policy(model_a, policy)?;
    let eval_b = evaluate_policy(model_b, policy)?;
    let gap = eval_b.loss[signal] - eval_a.loss[signal];
    let mut max_row_l1: f64 = 0.0;
    for s in 0..s_n {
        for a in 0..a_n {
            let mut d = 0.0;
            for s2 in 0..s_n {
                d += (model_a.transition(s, a, s2) - model_b.transition(s, a, s2)).abs();
            }
            max_row_l1 = max_row_l1.max(d);
        }
    }
    let v_max = (0..s_n).fold(0.0f64, |m, s| m.max(eval_a.bias[[signal, s]]));
    Ok(PerturbationReport {
        gap,
        bound: v_max * max_row_l1,
        max_row_l1,
    })
}

fn check_dims(model: &Cmdp, policy: &StationaryPolicy) -> Result<(), EvalError> {
    if policy.n_states() != model.n_states() || policy.n_actions() != model.n_actions() {
        return Err(EvalError::DimensionMismatch {
            context: format!(
                "model is {}x{}, policy is {}x{}",
                model.n_states(),
                model.n_actions(),
                policy.n_states(),
                policy.n_actions()
            ),
        });
    }
    Ok(())
}

/// States reachable from `start` (inclusive) along edges with probability
/// above `EDGE_TOL`, in discovery order.
fn reachable_from(p: &Array2<f64>, start: usize) -> Vec<usize> {
    let n = p.dim().0;
    let mut seen = vec![false; n];
    let mut order = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    seen[start] = true;
    queue.push_back(start);
    while let Some(s) = queue.pop_front() {
        order.push(s);
        for s2 in 0..n {
            if !seen[s2] && p[[s, s2]] > EDGE_TOL {
                seen[s2] = true;
                queue.push_back(s2);
            }
        }
    }
    order
}

fn restrict(p: &Array2<f64>, scope: &[usize]) -> Array2<f64> {
    let m = scope.len();
    let mut out = Array2::zeros((m, m));
    for (i, &s) in scope.iter().enumerate() {
        for (k, &s2) in scope.iter().enumerate() {
            out[[i, k]] = p[[s, s2]];
        }
    }
    out
}

/// Strong connectivity over positive-probability edges.
pub fn is_irreducible(p: &Array2<f64>) -> bool {
    let n = p.dim().0;
    if reachable_from(p, 0).len() != n {
        return false;
    }
    let pt = p.t().to_owned();
    reachable_from(&pt, 0).len() == n
}

/// Aperiodicity of an irreducible chain: the gcd over edges `(u, v)` of
/// `level(u) + 1 - level(v)` (BFS levels from state 0) equals 1.
pub fn is_aperiodic(p: &Array2<f64>) -> bool {
    let n = p.dim().0;
    let mut level = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    level[0] = 0;
    queue.push_back(0);
    while let Some(s) = queue.pop_front() {
        for s2 in 0..n {
            if p[[s, s2]] > EDGE_TOL && level[s2] == usize::MAX {
                level[s2] = level[s] + 1;
                queue.push_back(s2);
            }
        }
    }
    let mut g: u64 = 0;
    for u in 0..n {
        if level[u] == usize::MAX {
            return false; // not even reachable; caller should check irreducibility
        }
        for v in 0..n {
            if p[[u, v]] > EDGE_TOL {
                let d = (level[u] as i64 + 1 - level[v] as i64).unsigned_abs();
                g = gcd(g, d);
            }
        }
    }
    g == 1
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
