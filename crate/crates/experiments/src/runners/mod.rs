//! One runner per registered experiment, plus shared training helpers.

pub mod generalization;
pub mod image;
pub mod kernel;
pub mod mscale;
pub mod ordering;
pub mod poisson;
pub mod runge;

use fplab_core::freq::ComplexSpectrum;
use fplab_core::nn::{train, Dataset, LossSpec, MlpNetwork, Model, ProbeSpec, RunMeta, SpectralProbe, Transform};
use fplab_core::RunRecord;

use crate::config::{ExperimentConfig, ModelSpec};
use crate::error::ExpResult;
use crate::summary::Summary;

/// One seeded run under a variant label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRun {
    pub label: String,
    pub record: RunRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Spectrum { file: String, spectrum: ComplexSpectrum },
    Text { file: String, contents: String },
}

/// Everything an experiment produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub config: ExperimentConfig,
    pub runs: Vec<LabeledRun>,
    pub artifacts: Vec<Artifact>,
    pub summary: Summary,
}

impl Outcome {
    pub(crate) fn new(config: &ExperimentConfig) -> Self {
        let summary = Summary::new(&config.name, &config.config_hash(), "");
        Self { config: config.clone(), runs: Vec::new(), artifacts: Vec::new(), summary }
    }

    pub fn passed(&self) -> bool {
        self.summary.passed()
    }

    pub(crate) fn push_run(&mut self, label: &str, record: RunRecord) {
        self.runs.push(LabeledRun { label: label.into(), record });
    }

    pub(crate) fn spectrum(&mut self, file: String, spectrum: ComplexSpectrum) {
        self.artifacts.push(Artifact::Spectrum { file, spectrum });
    }

    /// CSV with an `x` column followed by one column per named series.
    pub(crate) fn curves(&mut self, file: &str, xs: &[f64], series: &[(&str, &[f64])]) {
        let mut contents = String::from("x");
        for (name, _) in series {
            contents.push(',');
            contents.push_str(name);
        }
        contents.push('\n');
        for (i, x) in xs.iter().enumerate() {
            contents.push_str(&x.to_string());
            for (_, v) in series {
                contents.push(',');
                contents.push_str(&v.get(i).map_or(String::new(), |y| y.to_string()));
            }
            contents.push('\n');
        }
        self.artifacts.push(Artifact::Text { file: file.into(), contents });
    }
}

pub(crate) fn meta(cfg: &ExperimentConfig, seed: u64) -> RunMeta {
    RunMeta { config_hash: cfg.config_hash(), seed }
}

/// `Δ_F` probe on the training points against the training targets.
pub(crate) fn train_probe(data: &Dataset, transform: Transform) -> SpectralProbe {
    SpectralProbe { dim: data.dim, inputs: data.inputs.clone(), reference: data.targets.clone(), transform }
}

pub(crate) fn bins(keys: &[f64]) -> Vec<usize> {
    keys.iter().map(|k| k.round().max(0.0) as usize).collect()
}

/// Trains a fresh network drawn from `model` with `seed`.
pub(crate) fn fit_mlp(
    cfg: &ExperimentConfig,
    model: &ModelSpec,
    loss: &LossSpec,
    data: &Dataset,
    probes: &ProbeSpec,
    seed: u64,
) -> ExpResult<(MlpNetwork, RunRecord)> {
    let mut net = model.build(seed)?;
    let rec = train(&mut net, data, loss, &cfg.optimizer, &cfg.schedule, probes, &meta(cfg, seed))?;
    Ok((net, rec))
}

/// Outputs of the last snapshot, or a fresh prediction when none was taken.
pub(crate) fn final_outputs<M: Model>(model: &M, rec: &RunRecord, inputs: &[f64]) -> ExpResult<Vec<f64>> {
    match rec.snapshots.last() {
        Some(s) if s.outputs.len() * model.input_dim() == inputs.len() => Ok(s.outputs.clone()),
        _ => Ok(model.predict(inputs)?),
    }
}
