use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use halftest::distributions::{MarginalSpec, NoiseModel};
use halftest::learner::LearnerConfig;
use halftest::rng::{purpose, stream_id, CtrRng};
use serde::{Deserialize, Serialize};

use crate::exit::Failure;
use crate::report::read_file;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    /// Dataset written by `sample`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    /// Directory receiving per-trial reports and the aggregate CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub marginal: MarginalSpec,
    pub noise: NoiseModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learner: Option<LearnerConfig>,
    #[serde(default = "one")]
    pub trials: usize,
    /// Either one seed per trial or a single root seed.
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Rows drawn by `sample`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Fresh rows used to measure the error of each learned hypothesis.
    #[serde(default = "default_eval")]
    pub eval_samples: usize,
    #[serde(default)]
    pub outputs: Outputs,
}

fn one() -> usize {
    1
}

fn default_eval() -> usize {
    100_000
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let bytes = read_file(path)?;
        let cfg: Self = serde_json::from_slice(&bytes)
            .with_context(|| format!("parsing configuration {}", path.display()))
            .map_err(Failure::usage)?;
        cfg.validate().map_err(Failure::usage)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.marginal.validate().context("marginal")?;
        self.noise.validate().context("noise")?;
        if self.noise.target.dim() != self.marginal.dim {
            bail!(
                "noise.target has dimension {} but marginal.dim is {}",
                self.noise.target.dim(),
                self.marginal.dim
            );
        }
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        if !(self.seeds.len() <= 1 || self.seeds.len() == self.trials) {
            bail!(
                "seeds must hold one root seed or one seed per trial ({}), found {}",
                self.trials,
                self.seeds.len()
            );
        }
        if self.samples == Some(0) {
            bail!("samples must be at least 1");
        }
        if self.eval_samples == 0 {
            bail!("eval_samples must be at least 1");
        }
        if let Some(l) = &self.learner {
            l.validate().context("learner")?;
        }
        Ok(())
    }

    /// Applies a `--seed` override: it replaces `seeds` by a single root.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seeds = vec![s];
        }
        self
    }

    pub fn learner(&self) -> anyhow::Result<&LearnerConfig> {
        self.learner
            .as_ref()
            .ok_or_else(|| anyhow!("learner section is required for this command"))
    }

    /// One seed per trial. A single root seed is used as-is for one trial and
    /// expanded through the trial stream otherwise.
    pub fn trial_seeds(&self) -> Vec<u64> {
        if self.seeds.len() == self.trials && self.trials > 1 {
            return self.seeds.clone();
        }
        let root = self.seeds.first().copied().unwrap_or(0);
        if self.trials == 1 {
            return vec![root];
        }
        (0..self.trials as u64)
            .map(|i| CtrRng::new(root, stream_id(purpose::TRIAL, i)).next_u64())
            .collect()
    }
}
