//! Trace output in a pinned CSV schema.
//!
//! Header: `kind,run_id,algo,env,t,cum_c0,..,cum_cM,regret_signed,
//! regret_pospart,viol1_signed,viol1_pospart,..,episode,fallback`.
//! Per-run rows carry `kind = "trace"`; the aggregate appends one
//! `run_id = "mean"` and one `run_id = "stderr"` row per instant with the
//! episode and fallback cells left empty.

use crate::metrics::{Aggregate, CurvePoint};
use crate::runner::RunTrace;
use anyhow::{bail, Context, Result};
use std::path::Path;

pub fn header(n_constraints: usize) -> Vec<String> {
    let mut cols = vec![
        "kind".to_string(),
        "run_id".to_string(),
        "algo".to_string(),
        "env".to_string(),
        "t".to_string(),
    ];
    for i in 0..=n_constraints {
        cols.push(format!("cum_c{i}"));
    }
    cols.push("regret_signed".to_string());
    cols.push("regret_pospart".to_string());
    for i in 1..=n_constraints {
        cols.push(format!("viol{i}_signed"));
        cols.push(format!("viol{i}_pospart"));
    }
    cols.push("episode".to_string());
    cols.push("fallback".to_string());
    cols
}

fn number(v: f64) -> String {
    v.to_string()
}

pub fn write_csv(path: &Path, traces: &[RunTrace], agg: &Aggregate) -> Result<()> {
    if traces.is_empty() {
        bail!("no traces to write");
    }
    let m = traces[0].points[0].violations_signed.len();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    writer.write_record(header(m))?;
    for trace in traces {
        for p in &trace.points {
            let mut row = vec![
                "trace".to_string(),
                trace.run_id.to_string(),
                trace.algo.clone(),
                trace.env.clone(),
                p.t.to_string(),
            ];
            row.extend(p.cum_costs.iter().map(|&v| number(v)));
            row.push(number(p.regret_signed));
            row.push(number(p.regret_pospart));
            for i in 0..m {
                row.push(number(p.violations_signed[i]));
                row.push(number(p.violations_pospart[i]));
            }
            row.push(p.episode.to_string());
            row.push(if p.fallback { "1" } else { "0" }.to_string());
            writer.write_record(&row)?;
        }
    }
    let algo = traces[0].algo.clone();
    let env = traces[0].env.clone();
    for (label, curve) in [("mean", &agg.mean), ("stderr", &agg.stderr)] {
        for p in curve.iter() {
            writer.write_record(agg_row(label, &algo, &env, p, m))?;
        }
    }
    writer.flush()?;
    Ok(())
}

fn agg_row(label: &str, algo: &str, env: &str, p: &CurvePoint, m: usize) -> Vec<String> {
    let mut row = vec![
        "agg".to_string(),
        label.to_string(),
        algo.to_string(),
        env.to_string(),
        p.t.to_string(),
    ];
    row.extend(p.cum_costs.iter().map(|&v| number(v)));
    row.push(number(p.regret_signed));
    row.push(number(p.regret_pospart));
    for i in 0..m {
        row.push(number(p.violations_signed[i]));
        row.push(number(p.violations_pospart[i]));
    }
    row.push(String::new());
    row.push(String::new());
    row
}
