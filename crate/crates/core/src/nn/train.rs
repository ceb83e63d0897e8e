//! Training loop with spectral, filtered and test-set probes.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{loss_and_gradient, loss_value, mse, Dataset, LossSpec};
use super::model::Model;
use super::optim::{BatchMode, Optimizer, OptimizerSpec};
use crate::error::{Error, Result};
use crate::freq::filter::{FilterSplit, GaussianFilter};
use crate::freq::spectrum::{dft_bins, nudft_along, nudft_angular, relative_spectral_error, ComplexSpectrum};
use crate::record::{EpochRecord, RunRecord, Snapshot};

/// Loss magnitude treated as divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Which transform turns sampled outputs into a spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transform {
    /// Selected bins of the uniform DFT of the samples, in input order.
    UniformBins { bins: Vec<usize> },
    /// Nonuniform transform at frequencies `k·direction`.
    Along { direction: Vec<f64>, ks: Vec<f64> },
    /// Nonuniform transform of 1-d samples at angular frequencies `ω`.
    Angular { omegas: Vec<f64> },
}

impl Transform {
    pub fn keys(&self) -> Vec<f64> {
        match self {
            Transform::UniformBins { bins } => bins.iter().map(|&b| b as f64).collect(),
            Transform::Along { ks, .. } => ks.clone(),
            Transform::Angular { omegas } => omegas.clone(),
        }
    }

    pub fn apply(&self, points: &[f64], dim: usize, values: &[f64]) -> Result<ComplexSpectrum> {
        match self {
            Transform::UniformBins { bins } => Ok(dft_bins(values, bins)),
            Transform::Along { direction, ks } => nudft_along(points, dim, values, direction, ks),
            Transform::Angular { omegas } => {
                if dim != 1 {
                    return Err(Error::DimensionMismatch { expected: 1, got: dim });
                }
                nudft_angular(points, values, omegas)
            }
        }
    }
}

/// Tracks `Δ_F` of model outputs at `inputs` against the spectrum of `reference`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProbe {
    pub dim: usize,
    pub inputs: Vec<f64>,
    pub reference: Vec<f64>,
    pub transform: Transform,
}

/// Tracks `(e_low, e_high)` per width on a fixed point set.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterProbe {
    pub dim: usize,
    pub inputs: Vec<f64>,
    pub reference: Vec<f64>,
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProbeSpec {
    pub spectral: Option<SpectralProbe>,
    pub filter: Option<FilterProbe>,
    /// Test set whose mean squared error is recorded as the test loss.
    pub test: Option<Dataset>,
    /// Evaluation grid for snapshots (row-major), with epochs listed in [`Schedule::snapshots`].
    pub snapshot_inputs: Option<Vec<f64>>,
    pub snapshot_params: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecordCadence {
    Every { epochs: u64 },
    /// Epoch 0 plus about `per_decade` log-spaced epochs per factor of ten.
    LogSpaced { per_decade: u32 },
}

impl RecordCadence {
    pub fn is_record_epoch(&self, e: u64) -> bool {
        match *self {
            RecordCadence::Every { epochs } => e.is_multiple_of(epochs.max(1)),
            RecordCadence::LogSpaced { per_decade } => {
                if e < 10 {
                    return true;
                }
                let p = f64::from(per_decade.max(1));
                let j = ((e as f64).log10() * p).round();
                (10f64.powf(j / p)).round() as u64 == e
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopRule {
    /// Every probed `Δ_F` is below the threshold.
    AllBelow { threshold: f64 },
    TrainLossBelow { threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub epochs: u64,
    pub record: RecordCadence,
    pub stop: Option<StopRule>,
    /// Epochs at which snapshots are taken (when the probe spec has an evaluation grid).
    /// The final epoch is always snapshotted as well.
    pub snapshots: Vec<u64>,
}

impl Schedule {
    pub fn every(epochs: u64, cadence: u64) -> Self {
        Self { epochs, record: RecordCadence::Every { epochs: cadence }, stop: None, snapshots: Vec::new() }
    }
}

/// Identification carried into the record header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunMeta {
    pub config_hash: String,
    pub seed: u64,
}

/// Probe state precomputed from the reference data.
pub struct Recorder {
    spectral: Option<(SpectralProbe, ComplexSpectrum, Vec<f64>)>,
    filters: Vec<(GaussianFilter, FilterSplit)>,
    filter_inputs: Option<Vec<f64>>,
    test: Option<Dataset>,
    snapshot_inputs: Option<Vec<f64>>,
    snapshot_params: bool,
}

impl Recorder {
    pub fn new(probes: &ProbeSpec) -> Result<Self> {
        let spectral = match &probes.spectral {
            Some(p) => {
                let keys = p.transform.keys();
                if keys.iter().any(|k| !k.is_finite()) {
                    return Err(Error::InvalidParameter("probe frequencies must be finite".into()));
                }
                let target = p.transform.apply(&p.inputs, p.dim, &p.reference)?;
                for (k, a) in target.keys.iter().zip(&target.amps) {
                    if a.norm() == 0.0 {
                        return Err(Error::ZeroTargetAmplitude(*k));
                    }
                }
                Some((p.clone(), target, keys))
            }
            None => None,
        };
        let mut filters = Vec::new();
        if let Some(f) = &probes.filter {
            for &d in &f.deltas {
                let g = GaussianFilter::new(&f.inputs, f.dim, d)?;
                let split = g.split(&f.reference)?;
                filters.push((g, split));
            }
        }
        Ok(Self {
            spectral,
            filters,
            filter_inputs: probes.filter.as_ref().map(|f| f.inputs.clone()),
            test: probes.test.clone(),
            snapshot_inputs: probes.snapshot_inputs.clone(),
            snapshot_params: probes.snapshot_params,
        })
    }

    pub fn probe_keys(&self) -> Vec<f64> {
        self.spectral.as_ref().map(|s| s.2.clone()).unwrap_or_default()
    }

    pub fn filter_deltas(&self) -> Vec<f64> {
        self.filters.iter().map(|(g, _)| g.delta()).collect()
    }

    pub fn empty_record(&self, meta: &RunMeta) -> RunRecord {
        RunRecord::new(meta.config_hash.clone(), meta.seed, self.probe_keys(), self.filter_deltas())
    }

    pub fn observe<M: Model>(&self, model: &M, epoch: u64, train_loss: f64) -> Result<EpochRecord> {
        let delta_f = match &self.spectral {
            Some((p, target, keys)) => {
                let out = model.predict(&p.inputs)?;
                let spec = p.transform.apply(&p.inputs, p.dim, &out)?;
                relative_spectral_error(target, &spec, keys)?.values
            }
            None => Vec::new(),
        };
        let mut filtered = Vec::with_capacity(self.filters.len());
        if let Some(inputs) = &self.filter_inputs {
            let out = model.predict(inputs)?;
            for (g, split) in &self.filters {
                filtered.push(g.errors(split, &out)?);
            }
        }
        let test_loss = match &self.test {
            Some(t) => Some(mse(&model.predict(&t.inputs)?, &t.targets)),
            None => None,
        };
        Ok(EpochRecord { epoch, train_loss, test_loss, delta_f, filtered })
    }

    pub fn snapshot<M: Model>(&self, model: &M, epoch: u64) -> Result<Option<Snapshot>> {
        let Some(inputs) = &self.snapshot_inputs else { return Ok(None) };
        let params = self.snapshot_params.then(|| model.params().to_vec());
        Ok(Some(Snapshot { epoch, outputs: model.predict(inputs)?, params }))
    }
}

/// Whether a recorded epoch satisfies the stop rule.
pub fn stop_reached(rule: Option<StopRule>, rec: &EpochRecord) -> bool {
    match rule {
        Some(StopRule::AllBelow { threshold }) => !rec.delta_f.is_empty() && rec.delta_f.iter().all(|d| *d < threshold),
        Some(StopRule::TrainLossBelow { threshold }) => rec.train_loss < threshold,
        None => false,
    }
}

pub fn is_divergent(loss: f64) -> bool {
    !loss.is_finite() || loss > DIVERGENCE_THRESHOLD
}

/// Train `model` in place and return its trace.
///
/// Epoch `e` in the record is the state after `e` passes over the data. Identical
/// inputs give a bit-identical record.
pub fn train<M: Model>(
    model: &mut M,
    data: &Dataset,
    loss: &LossSpec,
    opt: &OptimizerSpec,
    schedule: &Schedule,
    probes: &ProbeSpec,
    meta: &RunMeta,
) -> Result<RunRecord> {
    loss.validate(model, data)?;
    let recorder = Recorder::new(probes)?;
    let mut record = recorder.empty_record(meta);
    let mut optimizer = Optimizer::new(*opt, model.num_params())?;
    let full = matches!(opt.batch, BatchMode::Full);
    let mut shuffler = match opt.batch {
        BatchMode::MiniBatch { shuffle_seed, .. } => Some(ChaCha8Rng::seed_from_u64(shuffle_seed)),
        BatchMode::Full => None,
    };
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut snap_iter = {
        let mut s = schedule.snapshots.clone();
        s.sort_unstable();
        s.dedup();
        s.into_iter().peekable()
    };

    for e in 0..=schedule.epochs {
        let last = e == schedule.epochs;
        let recording = last || schedule.record.is_record_epoch(e);
        let mut pending = None;
        let current_loss = if full {
            let (v, g) = loss_and_gradient(model, loss, data)?;
            pending = Some(g);
            Some(v)
        } else if recording {
            Some(loss_value(model, loss, data)?)
        } else {
            None
        };

        while snap_iter.peek().is_some_and(|&s| s < e) {
            snap_iter.next();
        }
        let snap_now = last || snap_iter.peek() == Some(&e);
        if snap_now {
            if let Some(s) = recorder.snapshot(model, e)? {
                record.snapshots.push(s);
            }
        }

        if let Some(v) = current_loss {
            if recording || is_divergent(v) {
                let rec = recorder.observe(model, e, v)?;
                let stop = stop_reached(schedule.stop, &rec);
                record.epochs.push(rec);
                if is_divergent(v) {
                    record.diverged = true;
                    break;
                }
                if stop && !last {
                    if !snap_now {
                        if let Some(s) = recorder.snapshot(model, e)? {
                            record.snapshots.push(s);
                        }
                    }
                    break;
                }
            }
        }
        if last {
            break;
        }

        match opt.batch {
            BatchMode::Full => {
                let g = pending.take().expect("full-batch gradient");
                optimizer.step(model.params_mut(), &g);
            }
            BatchMode::MiniBatch { size, .. } => {
                order.shuffle(shuffler.as_mut().expect("minibatch rng"));
                for chunk in order.chunks(size) {
                    let batch = data.subset(chunk);
                    let (v, g) = loss_and_gradient(model, loss, &batch)?;
                    if is_divergent(v) {
                        let rec = recorder.observe(model, e + 1, v)?;
                        record.epochs.push(rec);
                        record.diverged = true;
                        return Ok(record);
                    }
                    optimizer.step(model.params_mut(), &g);
                }
            }
        }
    }
    Ok(record)
}
