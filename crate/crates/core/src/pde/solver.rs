use serde::{Deserialize, Serialize};

use super::jacobi::{jacobi_until, JacobiErrorCurve};
use super::poisson::{assemble_poisson_1d, PoissonReference, PoissonSystem};
use crate::error::{Error, Result};
use crate::freq::spectrum::{nudft_angular, select_peaks};
use crate::nn::loss::{BoundarySet, Dataset, LossSpec, SourceFn};
use crate::nn::model::Model;
use crate::nn::optim::OptimizerSpec;
use crate::nn::train::{train, ProbeSpec, RunMeta, Schedule, SpectralProbe, Transform};
use crate::record::RunRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoissonLoss {
    Ritz,
    Lse,
}

/// Training setup for a network solving `−u'' = g` on `(−1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DnnPoissonConfig {
    pub loss: PoissonLoss,
    /// Boundary penalty weight.
    pub beta: f64,
    pub interior: Vec<f64>,
    pub boundary: Vec<f64>,
    /// Angular frequencies whose `Δ_F` is tracked on the interior samples.
    pub peaks: Vec<f64>,
    pub optimizer: OptimizerSpec,
    pub schedule: Schedule,
    pub snapshot_inputs: Option<Vec<f64>>,
}

impl DnnPoissonConfig {
    /// `n` evenly spaced interior samples, boundary `{−1, 1}`, `β = 10`, peaks at the source frequencies.
    pub fn evenly_spaced(reference: &PoissonReference, n: usize, optimizer: OptimizerSpec, schedule: Schedule) -> Self {
        let interior = (1..=n).map(|i| -1.0 + 2.0 * i as f64 / (n + 1) as f64).collect();
        Self {
            loss: PoissonLoss::Ritz,
            beta: 10.0,
            interior,
            boundary: vec![-1.0, 1.0],
            peaks: reference.frequencies(),
            optimizer,
            schedule,
            snapshot_inputs: None,
        }
    }
}

/// The `count` largest local maxima of `|û_ref(ω)|` on the interior samples, scanning
/// `ω = step, 2·step, …, max_omega`, ascending.
///
/// On an interval of length 2 nearby source frequencies can merge into one peak.
pub fn resolved_peaks(reference: &PoissonReference, inputs: &[f64], count: usize, max_omega: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(max_omega >= step) {
        return Err(Error::InvalidParameter(format!("bad frequency scan: step {step}, max {max_omega}")));
    }
    let omegas: Vec<f64> = (1..=(max_omega / step).floor() as usize).map(|j| (j as f64 * step * 1e9).round() / 1e9).collect();
    let values: Vec<f64> = inputs.iter().map(|&x| reference.eval(x)).collect();
    let spec = nudft_angular(inputs, &values, &omegas)?;
    Ok(select_peaks(&spec, count))
}

pub fn reference_system(n: usize, reference: &PoissonReference) -> Result<PoissonSystem> {
    assemble_poisson_1d(n, |x| reference.source(x))
}

/// Train `model` on the Ritz or LSE loss. The record's test loss is the mean squared
/// error against `u_ref` on the interior samples, and `Δ_F` is tracked at the peaks.
pub fn dnn_poisson_solve<M: Model>(model: &mut M, reference: &PoissonReference, cfg: &DnnPoissonConfig, meta: &RunMeta) -> Result<RunRecord> {
    if model.input_dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: model.input_dim() });
    }
    if cfg.boundary.is_empty() {
        return Err(Error::MissingBoundary);
    }
    let r = reference.clone();
    let source = SourceFn::new(move |x| r.source(x[0]));
    let boundary = BoundarySet {
        dim: 1,
        inputs: cfg.boundary.clone(),
        values: cfg.boundary.iter().map(|&x| reference.eval(x)).collect(),
    };
    let loss = match cfg.loss {
        PoissonLoss::Ritz => LossSpec::ritz(cfg.beta, source, boundary),
        PoissonLoss::Lse => LossSpec::lse(cfg.beta, source, boundary),
    };
    let targets: Vec<f64> = cfg.interior.iter().map(|&x| reference.eval(x)).collect();
    let data = Dataset::from_1d(cfg.interior.clone(), targets.clone())?;
    let spectral = (!cfg.peaks.is_empty()).then(|| SpectralProbe {
        dim: 1,
        inputs: cfg.interior.clone(),
        reference: targets,
        transform: Transform::Angular { omegas: cfg.peaks.clone() },
    });
    let probes = ProbeSpec {
        spectral,
        test: Some(data.clone()),
        snapshot_inputs: cfg.snapshot_inputs.clone(),
        ..ProbeSpec::default()
    };
    train(model, &data, &loss, &cfg.optimizer, &cfg.schedule, &probes, meta)
}

/// Both stages of a DNN-then-Jacobi solve, with max-norm errors against `u_ref` at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridRecord {
    pub dnn: RunRecord,
    /// `(epoch, error)` at the snapshot epochs of the DNN stage.
    pub dnn_errors: Vec<(u64, f64)>,
    /// Jacobi stage started from the network output on the nodes.
    pub jacobi: JacobiErrorCurve,
}

/// Train for `cfg.schedule.epochs` epochs, hand the network values at the grid nodes to
/// Jacobi, and iterate at most `iterations` times (stopping early below `target`).
pub fn hybrid_solve<M: Model>(
    model: &mut M,
    reference: &PoissonReference,
    cfg: &DnnPoissonConfig,
    sys: &PoissonSystem,
    iterations: u64,
    target: Option<f64>,
    meta: &RunMeta,
) -> Result<HybridRecord> {
    let mut staged = cfg.clone();
    staged.snapshot_inputs = Some(sys.nodes.clone());
    let dnn = dnn_poisson_solve(model, reference, &staged, meta)?;
    let exact: Vec<f64> = sys.nodes.iter().map(|&x| reference.eval(x)).collect();
    let max_err = |u: &[f64]| u.iter().zip(&exact).fold(0.0f64, |a, (x, r)| a.max((x - r).abs()));
    let dnn_errors = dnn.snapshots.iter().map(|s| (s.epoch, max_err(&s.outputs))).collect();
    let u0 = model.predict(&sys.nodes)?;
    let jacobi = jacobi_until(sys, &u0, &exact, iterations, target)?;
    Ok(HybridRecord { dnn, dnn_errors, jacobi })
}
