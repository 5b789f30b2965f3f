//! Seeded experiment execution.
//!
//! Every run uses its own deterministic generator (`base_seed + run index`)
//! and the fixed interaction order act → environment step → observe. The
//! runner keeps its own transition tally and cross-checks the agent's
//! counts at every recording instant, so a bookkeeping slip in a learner
//! fails the run instead of skewing a curve.

use crate::config::{AgentKind, AgentParams, ExperimentConfig};
use crate::formats::LoadedEnv;
use crate::metrics::{aggregate, metric_point, Aggregate, MetricPoint};
use anyhow::{bail, Context, Result};
use cmdp::agents::{Agent, ConrlAgent, CUcrlAgent, FixedPolicyAgent, PsconrlAgent, UcrlCmdpAgent};
use cmdp::lp::solve_cmdp_lp;
use cmdp::PlanOutcome;
use ndarray::Array3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The stationary benchmark the curves compare against.
#[derive(Debug, Clone)]
pub struct OracleInfo {
    /// Constrained optimum of the long-run objective; NaN when infeasible.
    pub objective: f64,
    pub thresholds: Vec<f64>,
    pub feasible: bool,
}

/// Solves the environment's model once for the benchmark value.
pub fn oracle_for(env: &LoadedEnv) -> Result<OracleInfo> {
    let model = env.model();
    match solve_cmdp_lp(model) {
        PlanOutcome::Optimal { objective, .. } => Ok(OracleInfo {
            objective,
            thresholds: model.thresholds().to_vec(),
            feasible: true,
        }),
        PlanOutcome::Infeasible { .. } => Ok(OracleInfo {
            objective: f64::NAN,
            thresholds: model.thresholds().to_vec(),
            feasible: false,
        }),
        PlanOutcome::NumericalFailure { detail } => {
            bail!("planning the benchmark failed numerically: {detail}")
        }
    }
}

pub fn build_agent(
    kind: AgentKind,
    env: &LoadedEnv,
    horizon: u64,
    params: &AgentParams,
) -> Box<dyn Agent> {
    let model = env.model();
    let (s_n, a_n) = (model.n_states(), model.n_actions());
    let thresholds = model.thresholds().to_vec();
    let delta = params.delta_for(horizon);
    match kind {
        AgentKind::Psconrl => Box::new(PsconrlAgent::new(
            model.costs().to_owned(),
            thresholds,
            params.prior,
        )),
        AgentKind::Conrl => Box::new(ConrlAgent::new(
            s_n,
            a_n,
            thresholds,
            delta,
            params.bonus_scale,
        )),
        AgentKind::Cucrl => Box::new(CUcrlAgent::new(
            s_n,
            a_n,
            thresholds,
            params.h,
            delta,
            params.bonus_scale,
        )),
        AgentKind::UcrlCmdp => Box::new(UcrlCmdpAgent::new(
            s_n,
            a_n,
            thresholds,
            horizon,
            params.alpha,
            delta,
            params.radius_scale,
        )),
        AgentKind::Uniform => Box::new(FixedPolicyAgent::uniform(s_n, a_n)),
    }
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub run_id: u32,
    pub algo: String,
    pub env: String,
    pub points: Vec<MetricPoint>,
}

impl RunTrace {
    pub fn final_point(&self) -> &MetricPoint {
        self.points.last().expect("a run records at least one point")
    }
}

/// One seeded run of `agent` against `env`.
pub fn run_one(
    env: &LoadedEnv,
    agent: &mut dyn Agent,
    horizon: u64,
    cadence: u64,
    oracle: &OracleInfo,
    run_id: u32,
    algo: &str,
    seed: u64,
) -> Result<RunTrace> {
    let model = env.model();
    let (s_n, a_n, m) = (model.n_states(), model.n_actions(), model.n_constraints());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    agent
        .reset(&mut rng)
        .with_context(|| format!("run {run_id}: agent reset"))?;
    let mut state = model.initial_state();
    let mut tally = Array3::<u64>::zeros((s_n, a_n, s_n));
    let mut cum = vec![0.0; m + 1];
    let mut points = Vec::with_capacity((horizon / cadence) as usize);
    for t in 1..=horizon {
        let action = agent.act(state, &mut rng);
        let (next, costs) = env.step(state, action, &mut rng);
        debug_assert_eq!(costs.len(), m + 1);
        agent
            .observe(state, action, &costs, next, &mut rng)
            .with_context(|| format!("run {run_id}: step {t}"))?;
        tally[[state, action, next]] += 1;
        for (acc, &c) in cum.iter_mut().zip(&costs) {
            *acc += c;
        }
        if t % cadence == 0 {
            if let Some(counts) = agent.transition_counts() {
                if counts != tally.view() {
                    bail!("run {run_id}: agent transition counts drifted from the runner tally at step {t}");
                }
            }
            points.push(metric_point(
                t,
                &cum,
                oracle.objective,
                &oracle.thresholds,
                agent.episode_index(),
                agent.fallback_active(),
            ));
        }
        state = next;
    }
    Ok(RunTrace {
        run_id,
        algo: algo.to_string(),
        env: env.name().to_string(),
        points,
    })
}

/// Runs the full schedule of a config against an already-loaded environment.
pub fn run_experiment(
    config: &ExperimentConfig,
    env: &LoadedEnv,
) -> Result<(Vec<RunTrace>, Aggregate, OracleInfo)> {
    let oracle = oracle_for(env)?;
    let algo = config.agent.to_string();
    let mut traces = Vec::with_capacity(config.runs as usize);
    for run in 0..config.runs {
        let mut agent = build_agent(config.agent, env, config.horizon, &config.params);
        let seed = config.base_seed + run as u64;
        traces.push(run_one(
            env,
            agent.as_mut(),
            config.horizon,
            config.cadence,
            &oracle,
            run,
            &algo,
            seed,
        )?);
    }
    let agg = aggregate(&traces);
    Ok((traces, agg, oracle))
}
