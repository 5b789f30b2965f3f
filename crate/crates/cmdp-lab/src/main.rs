//! Command-line front end: solve a layout, run an experiment, sweep a
//! directory of configs.
//!
//! `plan` exit codes: 0 solved, 1 invalid input, 2 infeasible (with the
//! phase-1 certificate mass on stderr), 3 numerical failure.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use cmdp::lp::solve_cmdp_lp;
use cmdp::PlanOutcome;
use cmdp_lab::config::ExperimentConfig;
use cmdp_lab::csv_out::write_csv;
use cmdp_lab::formats::{load_environment, LoadedEnv};
use cmdp_lab::runner::run_experiment;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "cmdp-lab", about = "Constrained-MDP planning and learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one environment's occupancy program and print the optimum.
    Plan {
        /// Builtin layout name, grid-spec JSON, or raw model JSON.
        #[arg(long)]
        env: String,
        /// Override the grid constraint threshold.
        #[arg(long)]
        threshold: Option<f64>,
        /// Override the grid slip probability.
        #[arg(long)]
        slip: Option<f64>,
        /// Emit the solution as JSON (objective, expected costs, policy).
        #[arg(long)]
        json: bool,
    },
    /// Execute one experiment config and write its CSV trace.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run every *.json config in a directory, in name order.
    Sweep {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match cli.command {
        Command::Plan { env, threshold, slip, json } => cmd_plan(&env, threshold, slip, json),
        Command::Run { config, output } => cmd_run(&config, output),
        Command::Sweep { dir } => cmd_sweep(&dir),
    };
    std::process::exit(code);
}

fn cmd_plan(source: &str, threshold: Option<f64>, slip: Option<f64>, json: bool) -> i32 {
    let env = match load_environment(source, threshold, slip) {
        Ok(env) => env,
        Err(e) => {
            eprintln!("error: {e:#}");
            return 1;
        }
    };
    let model = env.model();
    match solve_cmdp_lp(model) {
        PlanOutcome::Optimal { occupancy, objective } => {
            let policy = cmdp::policy_from_occupancy(&occupancy);
            let expected: Vec<f64> = (0..=model.n_constraints())
                .map(|i| {
                    occupancy.expected_cost(model.costs().index_axis(ndarray::Axis(0), i))
                })
                .collect();
            if json {
                let policy_rows: Vec<Vec<f64>> =
                    policy.probs().rows().into_iter().map(|r| r.to_vec()).collect();
                let out = serde_json::json!({
                    "environment": env.name(),
                    "objective": objective,
                    "expected_costs": expected,
                    "thresholds": model.thresholds(),
                    "policy": policy_rows,
                });
                println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
            } else {
                println!("environment: {}", env.name());
                println!(
                    "states: {}, actions: {}, constraints: {}",
                    model.n_states(),
                    model.n_actions(),
                    model.n_constraints()
                );
                println!("objective: {objective:.6}");
                for (i, tau) in model.thresholds().iter().enumerate() {
                    println!(
                        "constraint {}: expected cost {:.6} <= threshold {}",
                        i + 1,
                        expected[i + 1],
                        tau
                    );
                }
                println!("(rerun with --json for the full policy)");
            }
            0
        }
        PlanOutcome::Infeasible { phase1_objective } => {
            eprintln!(
                "infeasible: no stationary policy satisfies the thresholds \
                 (unremovable constraint mass {phase1_objective:.3e})"
            );
            2
        }
        PlanOutcome::NumericalFailure { detail } => {
            eprintln!("numerical failure: {detail}");
            3
        }
    }
}

fn load_and_run(config_path: &Path, output: Option<PathBuf>) -> anyhow::Result<PathBuf> {
    let config = ExperimentConfig::load(config_path)?;
    let env: LoadedEnv = load_environment(&config.environment, config.threshold, config.slip)?;
    let out = output
        .or_else(|| config.output.clone())
        .ok_or_else(|| anyhow::anyhow!("no output path: set \"output\" in the config or pass --output"))?;
    let (traces, agg, oracle) = run_experiment(&config, &env)?;
    if !oracle.feasible {
        eprintln!("note: environment is infeasible; regret columns are NaN");
    }
    write_csv(&out, &traces, &agg)?;
    for trace in &traces {
        let p = trace.final_point();
        println!(
            "run {}: t={} regret={:.2} viol1+={:.2} episodes={} fallback={}",
            trace.run_id,
            p.t,
            p.regret_signed,
            p.violations_pospart.first().copied().unwrap_or(0.0),
            p.episode,
            p.fallback
        );
    }
    let last = agg.mean.last().expect("runs record points");
    let err = agg.stderr.last().expect("runs record points");
    println!(
        "{} on {}: final regret {:.2} +/- {:.2} -> {}",
        config.agent,
        env.name(),
        last.regret_signed,
        err.regret_signed,
        out.display()
    );
    Ok(out)
}

fn cmd_run(config_path: &Path, output: Option<PathBuf>) -> i32 {
    match load_and_run(config_path, output) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn cmd_sweep(dir: &Path) -> i32 {
    let entries = match std::fs::read_dir(dir) {
        Ok(entries) => entries,
        Err(e) => {
            eprintln!("error: reading {}: {e}", dir.display());
            return 1;
        }
    };
    let mut configs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    configs.sort();
    if configs.is_empty() {
        eprintln!("error: no *.json configs in {}", dir.display());
        return 1;
    }
    let total = configs.len();
    for (i, path) in configs.iter().enumerate() {
        println!("[{}/{}] {}", i + 1, total, path.display());
        if let Err(e) = load_and_run(path, None) {
            eprintln!("error: {}: {e:#}", path.display());
            return 1;
        }
    }
    0
}
