//! Degree-11 monomial fit on 12 equispaced Runge samples: edge error alongside low-first convergence.

use fplab_core::nn::{polynomial_fit_gd, ActivationKind, InitScheme, Model, OptimizerSpec, ProbeSpec, RecordCadence, Schedule, Transform};
use fplab_core::ntk::eigen;
use serde::{Deserialize, Serialize};

use super::{meta, train_probe, Outcome};
use crate::config::{knob_table, ExperimentConfig, LossChoice, ModelSpec, ProbeConfig};
use crate::error::{ExpError, ExpResult};
use crate::summary::{crossings, fmt_num, fmt_ts, median, t_or_inf, Check};
use crate::target::{linspace, make_target, TargetSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RungeKnobs {
    degree: usize,
    /// Learning rate as a fraction of `2/λ_max` of the quadratic loss; replaces the configured rate.
    step_fraction: f64,
    dense_points: usize,
    /// Keys at or below this count as low frequency.
    low_cutoff: f64,
}

pub fn runge_defaults() -> ExperimentConfig {
    ExperimentConfig {
        name: "runge".into(),
        seeds: vec![0],
        out_dir: None,
        pass_fraction: 1.0,
        samples: 12,
        target: TargetSpec::RungePoly { lo: -1.0, hi: 1.0 },
        model: ModelSpec::new(&[1, 1], ActivationKind::Tanh, InitScheme::Gaussian { std: 0.0 }),
        loss: LossChoice::Mse,
        optimizer: OptimizerSpec::gd(1.0),
        schedule: Schedule { epochs: 1_000_000, record: RecordCadence::LogSpaced { per_decade: 40 }, stop: None, snapshots: Vec::new() },
        probe: ProbeConfig { keys: vec![1.0, 2.0, 3.0, 4.0, 5.0], threshold: 0.1, deltas: Vec::new() },
        knobs: knob_table(&RungeKnobs { degree: 11, step_fraction: 1.9, dense_points: 2001, low_cutoff: 2.0 }),
    }
}

/// Largest eigenvalue of the loss Hessian `(2/n) VᵀV` in the monomial basis.
fn hessian_max_eigenvalue(xs: &[f64], degree: usize) -> ExpResult<f64> {
    let p = degree + 1;
    let n = xs.len() as f64;
    let mut h = vec![0.0; p * p];
    for &x in xs {
        let pow: Vec<f64> = (0..p).map(|j| x.powi(j as i32)).collect();
        for i in 0..p {
            for j in 0..p {
                h[i * p + j] += 2.0 / n * pow[i] * pow[j];
            }
        }
    }
    Ok(eigen(&h, p)?.values[0])
}

/// Newton form of the interpolating polynomial through `(xs, ys)`.
fn newton_interpolant(xs: &[f64], ys: &[f64]) -> impl Fn(f64) -> f64 {
    let mut c = ys.to_vec();
    for j in 1..xs.len() {
        for i in (j..xs.len()).rev() {
            c[i] = (c[i] - c[i - 1]) / (xs[i] - xs[i - j]);
        }
    }
    let nodes = xs.to_vec();
    move |x| c.iter().zip(&nodes).rev().fold(0.0, |acc, (ci, xi)| acc * (x - xi) + ci)
}

/// Index of the sample subinterval containing the largest absolute error on the dense grid.
fn worst_subinterval(nodes: &[f64], dense: &[f64], err: &[f64]) -> usize {
    let i = err.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).map_or(0, |(i, _)| i);
    nodes.windows(2).position(|w| dense[i] <= w[1]).unwrap_or(nodes.len().saturating_sub(2))
}

pub fn run_runge(cfg: &ExperimentConfig, out: &mut Outcome) -> ExpResult<()> {
    let k: RungeKnobs = cfg.knobs()?;
    let (lo, hi) = cfg.target.domain().ok_or_else(|| ExpError::Config("runge needs an interval target".into()))?;
    let data = make_target(&cfg.target, cfg.samples, 0)?.to_dataset()?;
    let lambda = hessian_max_eigenvalue(&data.inputs, k.degree)?;
    let opt = OptimizerSpec { learning_rate: k.step_fraction / lambda, ..cfg.optimizer };
    let probes = ProbeSpec { spectral: Some(train_probe(&data, Transform::UniformBins { bins: super::bins(&cfg.probe.keys) })), ..ProbeSpec::default() };

    let dense = linspace(lo, hi, k.dense_points);
    let truth: Vec<f64> = dense.iter().map(|&x| cfg.target.clean(x).unwrap_or(f64::NAN)).collect();
    let interp = newton_interpolant(&data.inputs, &data.targets);
    let exact: Vec<f64> = dense.iter().map(|&x| interp(x)).collect();
    let exact_err: Vec<f64> = exact.iter().zip(&truth).map(|(a, b)| a - b).collect();
    let edges = cfg.samples.saturating_sub(2);
    let worst = worst_subinterval(&data.inputs, &dense, &exact_err);
    let exact_max = exact_err.iter().fold(0.0f64, |m, e| m.max(e.abs()));

    let keys: Vec<String> = cfg.probe.keys.iter().map(|k| format!("{:>9}", format!("T({k})"))).collect();
    out.summary.header = format!("{:>4} {}  final_loss  gd_worst_interval", "seed", keys.join(" "));
    out.summary.note(format!("learning rate {} ({} of 2/lambda_max, lambda_max {})", fmt_num(opt.learning_rate), k.step_fraction / 2.0, fmt_num(lambda)));
    out.summary.note(format!("interpolant max error {} in subinterval {worst} of 0..={edges}", fmt_num(exact_max)));

    let mut orders = Vec::new();
    for &seed in &cfg.seeds {
        let (model, rec) = polynomial_fit_gd(k.degree, &data, &opt, &cfg.schedule, &probes, &meta(cfg, seed))?;
        let ts = crossings(&rec, &cfg.probe.keys, cfg.probe.threshold);
        let fit = model.predict(&dense)?;
        let gd_err: Vec<f64> = fit.iter().zip(&truth).map(|(a, b)| a - b).collect();
        let last = rec.final_epoch().map_or(f64::NAN, |e| e.train_loss);
        out.summary.row(format!("{seed:>4} {}  {}  {}", fmt_ts(&ts), fmt_num(last), worst_subinterval(&data.inputs, &dense, &gd_err)));
        let split = |low: bool| -> Vec<f64> {
            cfg.probe.keys.iter().zip(&ts).filter(|(key, _)| (**key <= k.low_cutoff) == low).map(|(_, t)| t_or_inf(*t)).collect()
        };
        let (tl, th) = (median(&split(true)), median(&split(false)));
        orders.push(tl.is_finite() && tl < th);
        if seed == cfg.seeds[0] {
            out.curves("fit.csv", &dense, &[("target", &truth), ("gd", &fit), ("interpolant", &exact)]);
        }
        out.push_run("poly", rec);
    }
    out.summary.check(Check::new("interpolant error at the edges", worst == 0 || worst == edges, format!("worst subinterval {worst}")));
    let passed = orders.iter().filter(|&&b| b).count();
    out.summary.check(Check::new(
        "low bins converge first",
        !orders.is_empty() && passed as f64 >= cfg.pass_fraction * orders.len() as f64,
        format!("{passed}/{} seeds with median T(k <= {}) < median T(k > {})", orders.len(), k.low_cutoff, k.low_cutoff),
    ));
    Ok(())
}
