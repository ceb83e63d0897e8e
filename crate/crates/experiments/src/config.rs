//! Experiment configuration: registered defaults layered with TOML overrides.

use std::path::PathBuf;

use fplab_core::nn::{init_network, ActivationKind, Architecture, InitScheme, LossSpec, MlpNetwork, OptimizerSpec, Schedule};
use fplab_core::record::fnv1a_hex;
use fplab_io::merge_tables;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::Table;

use crate::error::{ExpError, ExpResult};
use crate::registry;
use crate::target::TargetSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub widths: Vec<usize>,
    pub activation: ActivationKind,
    pub init: InitScheme,
}

impl ModelSpec {
    pub fn new(widths: &[usize], activation: ActivationKind, init: InitScheme) -> Self {
        Self { widths: widths.to_vec(), activation, init }
    }

    pub fn architecture(&self) -> Architecture {
        Architecture::uniform(&self.widths, self.activation)
    }

    pub fn build(&self, seed: u64) -> ExpResult<MlpNetwork> {
        Ok(init_network(&self.architecture(), self.init, seed)?)
    }
}

/// Loss selection; PDE losses take their source and boundary from the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossChoice {
    Mse,
    MsePlusGrad,
    Ritz { beta: f64 },
    Lse { beta: f64 },
}

impl LossChoice {
    /// Data-fitting loss; PDE losses are assembled by the PDE runners.
    pub fn data_loss(&self) -> ExpResult<LossSpec> {
        match self {
            LossChoice::Mse => Ok(LossSpec::mse()),
            LossChoice::MsePlusGrad => Ok(LossSpec::mse_plus_grad()),
            other => Err(ExpError::Config(format!("loss {other:?} needs a PDE source"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossChoice::Mse => "mse",
            LossChoice::MsePlusGrad => "mse_plus_grad",
            LossChoice::Ritz { .. } => "ritz",
            LossChoice::Lse { .. } => "lse",
        }
    }
}

/// Tracked frequencies, first-crossing threshold and filter widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub keys: Vec<f64>,
    pub threshold: f64,
    #[serde(default)]
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Fraction of seeds on which a per-seed property must hold.
    pub pass_fraction: f64,
    pub samples: usize,
    pub target: TargetSpec,
    pub model: ModelSpec,
    pub loss: LossChoice,
    pub optimizer: OptimizerSpec,
    pub schedule: Schedule,
    pub probe: ProbeConfig,
    /// Experiment-specific settings.
    #[serde(default)]
    pub knobs: Table,
}

impl ExperimentConfig {
    /// Registered defaults for `name`, deep-merged with `overrides`.
    pub fn resolve(name: &str, overrides: Option<&Table>) -> ExpResult<Self> {
        let entry = registry::lookup(name)?;
        let base = (entry.defaults)();
        let Some(over) = overrides else {
            return Ok(base);
        };
        if let Some(toml::Value::Table(knobs)) = over.get("knobs") {
            if let Some(bad) = knobs.keys().find(|key| !base.knobs.contains_key(*key)) {
                return Err(ExpError::Config(format!("{name} has no knob {bad:?}")));
            }
        }
        let mut table = base.to_table()?;
        merge_tables(&mut table, over);
        let cfg: ExperimentConfig = table.try_into().map_err(|e: toml::de::Error| ExpError::Config(e.to_string()))?;
        if cfg.name != name {
            return Err(ExpError::Config(format!("config names experiment {:?} but {name:?} was requested", cfg.name)));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> ExpResult<()> {
        registry::lookup(&self.name)?;
        if self.seeds.is_empty() {
            return Err(ExpError::Config("at least one seed is required".into()));
        }
        if !(self.pass_fraction > 0.0 && self.pass_fraction <= 1.0) {
            return Err(ExpError::Config(format!("pass_fraction must lie in (0, 1], got {}", self.pass_fraction)));
        }
        if self.samples == 0 {
            return Err(ExpError::Config("samples must be at least 1".into()));
        }
        if self.probe.threshold.is_nan() || self.probe.threshold <= 0.0 {
            return Err(ExpError::Config(format!("probe threshold must be positive, got {}", self.probe.threshold)));
        }
        self.model.architecture().validate()?;
        self.optimizer.validate()?;
        Ok(())
    }

    pub fn with_seed_count(mut self, n: usize) -> Self {
        self.seeds = (0..n as u64).collect();
        self
    }

    pub fn to_table(&self) -> ExpResult<Table> {
        Table::try_from(self).map_err(|e| ExpError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    /// Digest of everything that determines the numbers: the seed list and output
    /// directory are excluded.
    pub fn config_hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = None;
        c.seeds.clear();
        fnv1a_hex(c.to_toml().as_bytes())
    }

    /// Typed view of the experiment-specific settings.
    pub fn knobs<T: DeserializeOwned>(&self) -> ExpResult<T> {
        self.knobs.clone().try_into().map_err(|e: toml::de::Error| ExpError::Config(format!("knobs: {e}")))
    }
}

/// Serializes experiment-specific defaults into the `knobs` table.
pub(crate) fn knob_table<T: Serialize>(k: &T) -> Table {
    Table::try_from(k).expect("knob structs always serialize")
}
