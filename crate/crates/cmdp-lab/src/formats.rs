//! Environment sources: builtin layouts, grid-spec files, raw model files.

use anyhow::{bail, Context, Result};
use cmdp::envs::{builtin, builtin_names, compile, CompiledGrid, GridSpec};
use cmdp::Cmdp;
use ndarray::Array3;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// On-disk form of a raw constrained model. Dimensions are declared
/// explicitly and checked against the nested arrays before the usual model
/// validation runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CmdpFile {
    pub n_states: usize,
    pub n_actions: usize,
    pub n_constraints: usize,
    /// `transitions[s][a][s']`
    pub transitions: Vec<Vec<Vec<f64>>>,
    /// `costs[i][s][a]`, signal 0 is the objective
    pub costs: Vec<Vec<Vec<f64>>>,
    pub thresholds: Vec<f64>,
    pub initial_state: usize,
}

impl CmdpFile {
    pub fn into_model(self) -> Result<Cmdp> {
        let (s_n, a_n, m) = (self.n_states, self.n_actions, self.n_constraints);
        let mut transitions = Array3::zeros((s_n, a_n, s_n));
        let mut costs = Array3::zeros((m + 1, s_n, a_n));
        if self.transitions.len() != s_n {
            bail!("transitions: expected {s_n} states, found {}", self.transitions.len());
        }
        for (s, row) in self.transitions.iter().enumerate() {
            if row.len() != a_n {
                bail!("transitions[{s}]: expected {a_n} actions, found {}", row.len());
            }
            for (a, dist) in row.iter().enumerate() {
                if dist.len() != s_n {
                    bail!("transitions[{s}][{a}]: expected {s_n} entries, found {}", dist.len());
                }
                for (s2, &p) in dist.iter().enumerate() {
                    transitions[[s, a, s2]] = p;
                }
            }
        }
        if self.costs.len() != m + 1 {
            bail!("costs: expected {} signals, found {}", m + 1, self.costs.len());
        }
        for (i, table) in self.costs.iter().enumerate() {
            if table.len() != s_n {
                bail!("costs[{i}]: expected {s_n} states, found {}", table.len());
            }
            for (s, row) in table.iter().enumerate() {
                if row.len() != a_n {
                    bail!("costs[{i}][{s}]: expected {a_n} actions, found {}", row.len());
                }
                for (a, &c) in row.iter().enumerate() {
                    costs[[i, s, a]] = c;
                }
            }
        }
        Cmdp::new(transitions, costs, self.thresholds, self.initial_state)
            .context("model file failed validation")
    }

    pub fn from_model(model: &Cmdp) -> Self {
        let (s_n, a_n, m) = (model.n_states(), model.n_actions(), model.n_constraints());
        Self {
            n_states: s_n,
            n_actions: a_n,
            n_constraints: m,
            transitions: (0..s_n)
                .map(|s| (0..a_n).map(|a| model.transition_row(s, a).to_vec()).collect())
                .collect(),
            costs: (0..=m)
                .map(|i| {
                    (0..s_n)
                        .map(|s| (0..a_n).map(|a| model.cost(i, s, a)).collect())
                        .collect()
                })
                .collect(),
            thresholds: model.thresholds().to_vec(),
            initial_state: model.initial_state(),
        }
    }
}

/// A runnable environment: either a compiled gridworld with its independent
/// simulator, or a raw model stepped by sampling its kernel rows.
pub enum LoadedEnv {
    Grid { name: String, grid: CompiledGrid },
    Raw { name: String, model: Cmdp },
}

impl LoadedEnv {
    pub fn name(&self) -> &str {
        match self {
            LoadedEnv::Grid { name, .. } | LoadedEnv::Raw { name, .. } => name,
        }
    }

    pub fn model(&self) -> &Cmdp {
        match self {
            LoadedEnv::Grid { grid, .. } => grid.model(),
            LoadedEnv::Raw { model, .. } => model,
        }
    }

    /// One environment transition and the step's cost vector (objective
    /// first). Gridworlds go through their simulator; raw models sample the
    /// kernel row directly.
    pub fn step<R: Rng + ?Sized>(
        &self,
        state: usize,
        action: usize,
        rng: &mut R,
    ) -> (usize, Vec<f64>) {
        match self {
            LoadedEnv::Grid { grid, .. } => {
                let (next, costs) = grid.sample_step(state, action, rng);
                (next, costs.to_vec())
            }
            LoadedEnv::Raw { model, .. } => {
                let row = model.transition_row(state, action);
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut next = row.len() - 1;
                for (s2, &p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        next = s2;
                        break;
                    }
                }
                let costs = (0..=model.n_constraints())
                    .map(|i| model.cost(i, state, action))
                    .collect();
                (next, costs)
            }
        }
    }
}

/// Resolves an environment source: a builtin layout name, a grid-spec JSON
/// file, or a raw model JSON file. `threshold` and `slip` override the grid
/// spec before compilation and are rejected for raw model files.
pub fn load_environment(
    source: &str,
    threshold: Option<f64>,
    slip: Option<f64>,
) -> Result<LoadedEnv> {
    if let Some(mut spec) = builtin(source) {
        apply_overrides(&mut spec, threshold, slip);
        let grid = compile(&spec).with_context(|| format!("layout {source:?}"))?;
        return Ok(LoadedEnv::Grid { name: source.to_string(), grid });
    }
    let path = Path::new(source);
    if !path.exists() {
        bail!(
            "{source:?} is neither a builtin layout ({}) nor an existing file",
            builtin_names().join(", ")
        );
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {source}"))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {source}"))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| source.to_string());
    let obj = value.as_object().with_context(|| format!("{source}: expected a JSON object"))?;
    if obj.contains_key("variant") {
        let mut spec: GridSpec =
            serde_json::from_value(value).with_context(|| format!("{source}: grid spec"))?;
        apply_overrides(&mut spec, threshold, slip);
        let grid = compile(&spec).with_context(|| format!("layout {source}"))?;
        Ok(LoadedEnv::Grid { name, grid })
    } else if obj.contains_key("transitions") {
        if threshold.is_some() || slip.is_some() {
            bail!("threshold/slip overrides apply to grid layouts, not raw model files");
        }
        let file: CmdpFile =
            serde_json::from_value(value).with_context(|| format!("{source}: model file"))?;
        Ok(LoadedEnv::Raw { name, model: file.into_model()? })
    } else {
        bail!("{source}: neither a grid spec (no \"variant\" key) nor a model file (no \"transitions\" key)");
    }
}

fn apply_overrides(spec: &mut GridSpec, threshold: Option<f64>, slip: Option<f64>) {
    if let Some(tau) = threshold {
        spec.threshold = tau;
    }
    if let Some(eps) = slip {
        spec.slip = eps;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn builtin_names_resolve() {
        for name in builtin_names() {
            let env = load_environment(name, None, None).unwrap();
            assert_eq!(env.name(), *name);
            assert!(env.model().n_states() > 0);
        }
    }

    #[test]
    fn threshold_override_reaches_the_model() {
        let env = load_environment("marsrover4x4", Some(0.05), None).unwrap();
        assert_eq!(env.model().thresholds(), &[0.05]);
    }

    #[test]
    fn model_file_round_trips_and_validates() {
        let env = load_environment("marsrover4x4", None, None).unwrap();
        let file = CmdpFile::from_model(env.model());
        let text = serde_json::to_string(&file).unwrap();
        let back: CmdpFile = serde_json::from_str(&text).unwrap();
        let model = back.into_model().unwrap();
        assert_eq!(model.n_states(), env.model().n_states());
        assert_eq!(model.thresholds(), env.model().thresholds());
    }

    #[test]
    fn model_file_shape_lies_are_caught() {
        let env = load_environment("marsrover4x4", None, None).unwrap();
        let mut file = CmdpFile::from_model(env.model());
        file.n_states += 1;
        assert!(file.into_model().is_err());
    }

    #[test]
    fn raw_files_step_by_kernel_sampling() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let grid_env = load_environment("marsrover4x4", None, None).unwrap();
        let file = CmdpFile::from_model(grid_env.model());
        std::fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();
        let env = load_environment(path.to_str().unwrap(), None, None).unwrap();
        assert!(matches!(env, LoadedEnv::Raw { .. }));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = env.model().n_states();
        let mut state = env.model().initial_state();
        for _ in 0..500 {
            let (next, costs) = env.step(state, 0, &mut rng);
            assert!(next < n);
            assert_eq!(costs.len(), 2);
            state = next;
        }
    }

    #[test]
    fn unknown_sources_and_override_misuse_fail() {
        assert!(load_environment("no-such-layout", None, None).is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let env = load_environment("marsrover4x4", None, None).unwrap();
        let file = CmdpFile::from_model(env.model());
        std::fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();
        assert!(load_environment(path.to_str().unwrap(), Some(0.5), None).is_err());
    }
}
