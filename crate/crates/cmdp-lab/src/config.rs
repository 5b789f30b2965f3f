//! Experiment descriptions loaded from JSON.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    Psconrl,
    Conrl,
    Cucrl,
    UcrlCmdp,
    Uniform,
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentKind::Psconrl => "psconrl",
            AgentKind::Conrl => "conrl",
            AgentKind::Cucrl => "cucrl",
            AgentKind::UcrlCmdp => "ucrl-cmdp",
            AgentKind::Uniform => "uniform",
        })
    }
}

/// Learner hyperparameters. Every field has a sensible default so configs
/// only name what they change.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentParams {
    /// Symmetric Dirichlet prior weight (posterior sampling).
    pub prior: f64,
    /// Confidence level; `None` means `1 / horizon`.
    pub delta: Option<f64>,
    /// Exploration phase length per episode (cucrl).
    pub h: u64,
    /// Episode-length exponent in (0, 1) (ucrl-cmdp).
    pub alpha: f64,
    /// Multiplier on the cost/reward confidence bonus (conrl, cucrl).
    pub bonus_scale: f64,
    /// Multiplier on the kernel confidence radius (ucrl-cmdp).
    pub radius_scale: f64,
}

impl Default for AgentParams {
    fn default() -> Self {
        Self {
            prior: 0.01,
            delta: None,
            h: 100,
            alpha: 0.5,
            bonus_scale: 1.0,
            radius_scale: 1.0,
        }
    }
}

impl AgentParams {
    pub fn delta_for(&self, horizon: u64) -> f64 {
        self.delta.unwrap_or(1.0 / horizon as f64)
    }
}

/// One experiment: an environment, an agent, and a run schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Builtin layout name, grid-spec file, or raw model file.
    pub environment: String,
    pub agent: AgentKind,
    pub horizon: u64,
    pub runs: u32,
    #[serde(default)]
    pub base_seed: u64,
    /// CSV destination; optional so callers can override.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Metric recording interval; must divide the horizon.
    #[serde(default = "default_cadence")]
    pub cadence: u64,
    #[serde(default)]
    pub params: AgentParams,
    /// Grid-layout overrides.
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub slip: Option<f64>,
}

fn default_cadence() -> u64 {
    100
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let config: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            bail!("horizon must be at least 1");
        }
        if self.runs == 0 {
            bail!("runs must be at least 1");
        }
        if self.cadence == 0 || self.horizon % self.cadence != 0 {
            bail!(
                "cadence {} must be positive and divide the horizon {}",
                self.cadence,
                self.horizon
            );
        }
        if self.params.prior <= 0.0 {
            bail!("prior must be positive");
        }
        if let Some(d) = self.params.delta {
            if !(0.0..1.0).contains(&d) || d == 0.0 {
                bail!("delta must lie in (0, 1)");
            }
        }
        if !(self.params.alpha > 0.0 && self.params.alpha < 1.0) {
            bail!("alpha must lie in (0, 1)");
        }
        if self.params.h == 0 {
            bail!("h must be at least 1");
        }
        if self.params.bonus_scale < 0.0 || self.params.radius_scale < 0.0 {
            bail!("scales must be nonnegative");
        }
        Ok(())
    }
}
