use std::path::Path;

use serde::Deserialize;

use mxsetup::{BatchDistribution, Costs, ModelParams, SetupPolicy};

use crate::error::CliError;

/// JSON model description.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub lambda: f64,
    pub mu: f64,
    pub c: usize,
    pub setup: SetupConfig,
    pub batch: BatchConfig,
    #[serde(default)]
    pub costs: CostsConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SetupConfig {
    Staggered { alpha: f64 },
    Vacation { alpha: f64 },
    Custom { alphas: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum BatchConfig {
    Deterministic {
        size: usize,
    },
    Geometric {
        p: f64,
        #[serde(default)]
        k_max: Option<usize>,
    },
    Custom {
        pmf: Vec<(usize, f64)>,
    },
}

/// Missing fields fall back to the library defaults.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostsConfig {
    #[serde(default = "default_setup")]
    pub setup: f64,
    #[serde(default = "default_run")]
    pub run: f64,
    #[serde(default = "default_idle")]
    pub idle: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_setup() -> f64 {
    Costs::default().setup
}
fn default_run() -> f64 {
    Costs::default().run
}
fn default_idle() -> f64 {
    Costs::default().idle
}
fn default_delta() -> f64 {
    Costs::default().delta
}

impl Default for CostsConfig {
    fn default() -> Self {
        let d = Costs::default();
        Self {
            setup: d.setup,
            run: d.run,
            idle: d.idle,
            delta: d.delta,
        }
    }
}

impl ModelConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn batch(&self) -> mxsetup::Result<BatchDistribution> {
        match &self.batch {
            BatchConfig::Deterministic { size } => BatchDistribution::deterministic(*size),
            BatchConfig::Geometric { p, k_max } => BatchDistribution::geometric(*p, *k_max),
            BatchConfig::Custom { pmf } => BatchDistribution::custom(pmf),
        }
    }

    pub fn setup_policy(&self) -> SetupPolicy {
        match &self.setup {
            SetupConfig::Staggered { alpha } => SetupPolicy::Staggered(*alpha),
            SetupConfig::Vacation { alpha } => SetupPolicy::Vacation(*alpha),
            SetupConfig::Custom { alphas } => SetupPolicy::Custom(alphas.clone()),
        }
    }

    pub fn costs(&self) -> Costs {
        Costs {
            setup: self.costs.setup,
            run: self.costs.run,
            idle: self.costs.idle,
            delta: self.costs.delta,
        }
    }

    /// Builds and validates the model, including the stability check.
    pub fn to_params(&self) -> mxsetup::Result<ModelParams> {
        ModelParams::new(self.lambda, self.mu, self.c, &self.setup_policy(), self.batch()?, self.costs())
    }
}
