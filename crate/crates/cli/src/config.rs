//! Run configuration loaded from TOML.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use naqas::evo::{CostWeights, EvoConfig};
use naqas::qsim::NoiseSpec;
use naqas::tasks::{TaskName, TaskSpec};
use naqas::train::TrainConfig;
use serde::{Deserialize, Serialize};

/// Everything a run needs. Every key is optional; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub task: TaskName,
    pub seed: u64,
    /// Output directory; the `--out` flag and `NAQAS_OUT` take precedence.
    pub out: Option<PathBuf>,
    /// Evaluation threads. Results do not depend on it.
    pub workers: usize,
    /// Overrides the task's supernet count.
    pub supernets: Option<usize>,
    pub noise: NoiseSpec,
    pub train: TrainConfig,
    pub evo: EvoConfig,
    pub cost: CostWeights,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: TaskName::Binary,
            seed: 0,
            out: None,
            workers: 1,
            supernets: None,
            noise: NoiseSpec::default(),
            train: TrainConfig::default(),
            evo: EvoConfig::default(),
            cost: CostWeights::default(),
        }
    }
}

impl RunConfig {
    /// Parses and validates. Syntax and schema errors carry line and column.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("invalid config: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml_str(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        self.train.validate()?;
        self.evo.validate()?;
        if self.workers == 0 {
            bail!("workers must be at least 1");
        }
        if self.supernets == Some(0) {
            bail!("supernets must be at least 1");
        }
        if !(self.cost.alpha >= 0.0 && self.cost.beta >= 0.0) {
            bail!("cost weights must be non-negative");
        }
        Ok(())
    }

    /// The task with any supernet override applied.
    pub fn task_spec(&self) -> TaskSpec {
        let mut task = TaskSpec::for_name(self.task);
        if let Some(k) = self.supernets {
            task.supernets = k;
        }
        task
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
    }

    #[test]
    fn sections_parse() {
        let cfg = RunConfig::from_toml_str(
            "task = \"iris\"\nseed = 7\n[noise]\nchannel = \"thermal_relaxation\"\nt1 = 80.0\n[train]\neta = 0.5\n[evo]\npop_size = 10\n",
        )
        .unwrap();
        assert_eq!(cfg.task, TaskName::Iris);
        assert_eq!(cfg.noise, NoiseSpec::thermal_relaxation(80.0, 50.0, 0.03));
        assert_eq!(cfg.train.eta, 0.5);
        assert_eq!(cfg.evo.pop_size, 10);
        let again = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_keys_report_their_line() {
        let err = RunConfig::from_toml_str("seed = 1\n\n[train]\netaa = 0.1\n").unwrap_err();
        let text = format!("{err:#}");
        assert!(text.contains("line 4"), "{text}");
        assert!(text.contains("etaa"), "{text}");
        let err = RunConfig::from_toml_str("[noise]\nchannel = \"depolarizing\"\nt1 = 3.0\n").unwrap_err();
        assert!(format!("{err:#}").contains("line"));
    }

    #[test]
    fn semantic_errors_are_rejected() {
        assert!(RunConfig::from_toml_str("workers = 0").is_err());
        assert!(RunConfig::from_toml_str("[evo]\npop_size = 7").is_err());
        assert!(RunConfig::from_toml_str("[noise]\nchannel = \"bit_flip\"\np = 2.0").is_err());
    }
}
