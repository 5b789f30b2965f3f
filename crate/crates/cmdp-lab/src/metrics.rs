//! Regret and violation curves from cumulative cost tallies.
//!
//! The signed curves compare the realized cumulative cost against the
//! stationary benchmark (`t * optimum` for the objective, `t * threshold`
//! per constraint); the positive-part curves clip the same quantity at
//! zero. On an infeasible environment the benchmark objective is undefined
//! and the regret columns carry NaN.

use crate::runner::RunTrace;

/// One recorded instant of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricPoint {
    pub t: u64,
    /// Cumulative cost per signal, objective first.
    pub cum_costs: Vec<f64>,
    pub regret_signed: f64,
    pub regret_pospart: f64,
    /// Per constraint, `cum_cost_i - t * threshold_i`.
    pub violations_signed: Vec<f64>,
    pub violations_pospart: Vec<f64>,
    pub episode: u64,
    pub fallback: bool,
}

pub fn metric_point(
    t: u64,
    cum_costs: &[f64],
    oracle_objective: f64,
    thresholds: &[f64],
    episode: u64,
    fallback: bool,
) -> MetricPoint {
    assert_eq!(cum_costs.len(), thresholds.len() + 1);
    let regret_signed = cum_costs[0] - t as f64 * oracle_objective;
    let violations_signed: Vec<f64> = thresholds
        .iter()
        .zip(&cum_costs[1..])
        .map(|(&tau, &c)| c - t as f64 * tau)
        .collect();
    MetricPoint {
        t,
        cum_costs: cum_costs.to_vec(),
        regret_signed,
        regret_pospart: regret_signed.max(0.0),
        violations_pospart: violations_signed.iter().map(|v| v.max(0.0)).collect(),
        violations_signed,
        episode,
        fallback,
    }
}

/// One instant of an averaged curve; episode and fallback do not average.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub t: u64,
    pub cum_costs: Vec<f64>,
    pub regret_signed: f64,
    pub regret_pospart: f64,
    pub violations_signed: Vec<f64>,
    pub violations_pospart: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Aggregate {
    pub mean: Vec<CurvePoint>,
    pub stderr: Vec<CurvePoint>,
}

/// Sample mean and standard error (sample std over sqrt(n); 0 for n = 1).
fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Averages runs pointwise. All traces must share the recording grid.
pub fn aggregate(traces: &[RunTrace]) -> Aggregate {
    assert!(!traces.is_empty(), "nothing to aggregate");
    let grid: Vec<u64> = traces[0].points.iter().map(|p| p.t).collect();
    for trace in traces {
        let this: Vec<u64> = trace.points.iter().map(|p| p.t).collect();
        assert_eq!(this, grid, "runs recorded on different grids");
    }
    let m = traces[0].points[0].violations_signed.len();
    let n_signals = m + 1;
    let mut mean = Vec::with_capacity(grid.len());
    let mut stderr = Vec::with_capacity(grid.len());
    for (j, &t) in grid.iter().enumerate() {
        let col = |f: &dyn Fn(&MetricPoint) -> f64| -> (f64, f64) {
            let xs: Vec<f64> = traces.iter().map(|tr| f(&tr.points[j])).collect();
            mean_stderr(&xs)
        };
        let mut mean_point = CurvePoint {
            t,
            cum_costs: Vec::with_capacity(n_signals),
            regret_signed: 0.0,
            regret_pospart: 0.0,
            violations_signed: Vec::with_capacity(m),
            violations_pospart: Vec::with_capacity(m),
        };
        let mut err_point = mean_point.clone();
        for i in 0..n_signals {
            let (mu, se) = col(&|p| p.cum_costs[i]);
            mean_point.cum_costs.push(mu);
            err_point.cum_costs.push(se);
        }
        let (mu, se) = col(&|p| p.regret_signed);
        mean_point.regret_signed = mu;
        err_point.regret_signed = se;
        let (mu, se) = col(&|p| p.regret_pospart);
        mean_point.regret_pospart = mu;
        err_point.regret_pospart = se;
        for i in 0..m {
            let (mu, se) = col(&|p| p.violations_signed[i]);
            mean_point.violations_signed.push(mu);
            err_point.violations_signed.push(se);
            let (mu, se) = col(&|p| p.violations_pospart[i]);
            mean_point.violations_pospart.push(mu);
            err_point.violations_pospart.push(se);
        }
        mean.push(mean_point);
        stderr.push(err_point);
    }
    Aggregate { mean, stderr }
}
