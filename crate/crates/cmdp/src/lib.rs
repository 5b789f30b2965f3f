//! Constrained average-cost MDPs with occupancy-measure planning.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: the CMDP container ([`Cmdp`]) and stationary policies, plus
//!   structural validation.
//! - [`linalg`]: the small dense LU kernel everything else leans on.
//! - [`eval`]: exact average-cost policy evaluation (gain, bias, stationary
//!   distribution), hitting-time estimates and a perturbation bound.
//! - [`lp`]: a two-phase dense simplex, the occupancy-measure planner and the
//!   extended planner over a transition confidence set.
//! - [`posterior`]: per state-action Dirichlet posteriors over transition rows.
//! - [`agents`]: the posterior-sampling learner and three optimistic baselines
//!   behind a common trait.
//! - [`envs`]: gridworld benchmarks compiled to exact [`Cmdp`] instances with an
//!   independent sampling simulator.
//!
//! Costs are the primitive: every cost signal lives in `[0, 1]`, the objective
//! is the long-run average of cost 0, and each auxiliary cost `i >= 1` is held
//! below its threshold. Reward-based formulations are expressed as `1 - cost`.

pub mod agents;
pub mod envs;
pub mod eval;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod posterior;

pub use eval::{evaluate_policy, EvalError, PolicyEvaluation};
pub use lp::{policy_from_occupancy, solve_cmdp_lp, OccupancyMeasure, PlanOutcome};
pub use model::{validate, Cmdp, ModelError, StationaryPolicy, Violation};
