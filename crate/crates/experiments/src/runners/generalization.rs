//! Generalization experiments: parity against a low-frequency control, and early stopping.

use fplab_core::freq::{nudft_along, nudft_angular};
use fplab_core::nn::{mse, ActivationKind, Dataset, InitScheme, Model, OptimizerSpec, ProbeSpec, Schedule, StopRule, Transform};
use serde::{Deserialize, Serialize};

use super::{final_outputs, fit_mlp, train_probe, Outcome};
use crate::config::{knob_table, ExperimentConfig, LossChoice, ModelSpec, ProbeConfig};
use crate::error::{ExpError, ExpResult};
use crate::summary::{correlation, fmt_num, fmt_t, seed_check};
use crate::target::{linspace, make_target, parity_dataset, parity_split, TargetSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParityKnobs {
    /// Training MSE the parity net must reach.
    train_target: f64,
    /// Bound on `|corr(prediction, label)|` over the held-out vertices.
    max_test_correlation: f64,
    /// Control task: the same counts drawn from an evenly spaced three_sine grid, trained
    /// under the same epoch cap and stop rule.
    control_lo: f64,
    control_hi: f64,
    /// Allowed test/train MSE ratio of the control.
    control_ratio: f64,
}

pub fn parity_defaults() -> ExperimentConfig {
    let mut schedule = Schedule::every(4000, 10);
    schedule.stop = Some(StopRule::TrainLossBelow { threshold: 1e-2 });
    ExperimentConfig {
        name: "parity-gen".into(),
        seeds: (0..10).collect(),
        out_dir: None,
        pass_fraction: 0.7,
        samples: 200,
        target: TargetSpec::Parity { d: 10 },
        model: ModelSpec::new(&[10, 500, 100, 1], ActivationKind::Tanh, InitScheme::Gaussian { std: 0.05 }),
        loss: LossChoice::Mse,
        optimizer: OptimizerSpec::adam(5e-4),
        schedule,
        probe: ProbeConfig { keys: vec![0.25], threshold: 0.1, deltas: Vec::new() },
        knobs: knob_table(&ParityKnobs { train_target: 1e-2, max_test_correlation: 0.2, control_lo: -3.14, control_hi: 3.14, control_ratio: 2.0 }),
    }
}

/// Amplitude along the all-ones direction, `k ∈ [0, 1/2]`.
fn along_ones(inputs: &[f64], d: usize, values: &[f64]) -> ExpResult<fplab_core::freq::ComplexSpectrum> {
    let ks: Vec<f64> = (0..=50).map(|j| j as f64 / 100.0).collect();
    Ok(nudft_along(inputs, d, values, &vec![1.0; d], &ks)?)
}

pub fn run_parity(cfg: &ExperimentConfig, out: &mut Outcome) -> ExpResult<()> {
    let k: ParityKnobs = cfg.knobs()?;
    let TargetSpec::Parity { d } = cfg.target else {
        return Err(ExpError::Config("parity-gen needs a parity target".into()));
    };
    let loss = cfg.loss.data_loss()?;
    let all: Vec<usize> = (0..1usize << d).collect();
    let cube = parity_dataset(d, &all, format!("parity d={d}"))?;
    out.spectrum("spectrum-cube.csv".into(), along_ones(&cube.inputs, d, &cube.targets)?);
    out.summary.header = format!(
        "{:>4} {:>7} {:<10} {:<10} {:>9}   {:<10} {:<10} {:>6}",
        "seed", "epochs", "train", "test", "corr", "ctl_train", "ctl_test", "ratio"
    );
    let grid = linspace(k.control_lo, k.control_hi, 1 << d);
    let control = TargetSpec::ThreeSine { lo: k.control_lo, hi: k.control_hi };
    let mut control_model = cfg.model.clone();
    control_model.widths[0] = 1;
    let (mut parity_ok, mut control_ok) = (Vec::new(), Vec::new());
    for &seed in &cfg.seeds {
        let (train_idx, test_idx) = parity_split(d, cfg.samples, seed)?;
        let train = parity_dataset(d, &train_idx, String::new())?.to_dataset()?;
        let test = parity_dataset(d, &test_idx, String::new())?.to_dataset()?;
        let probes = ProbeSpec {
            spectral: Some(train_probe(&train, Transform::Along { direction: vec![1.0; d], ks: cfg.probe.keys.clone() })),
            test: Some(test.clone()),
            snapshot_inputs: Some(test.inputs.clone()),
            ..ProbeSpec::default()
        };
        let (net, rec) = fit_mlp(cfg, &cfg.model, &loss, &train, &probes, seed)?;
        let last = rec.final_epoch().cloned().ok_or_else(|| ExpError::Config("empty trace".into()))?;
        let pred = final_outputs(&net, &rec, &test.inputs)?;
        let corr = correlation(&pred, &test.targets);
        if seed == cfg.seeds[0] {
            out.spectrum(format!("spectrum-parity-seed{seed}.csv"), along_ones(&cube.inputs, d, &net.predict(&cube.inputs)?)?);
        }
        parity_ok.push(last.train_loss < k.train_target && corr.abs() < k.max_test_correlation);
        out.push_run("parity", rec);

        // same counts, same budget, smooth target
        let xs: Vec<f64> = train_idx.iter().map(|&i| grid[i]).collect();
        let ys = xs.iter().map(|&x| control.clean(x).expect("analytic")).collect();
        let ctrain = Dataset::from_1d(xs, ys)?;
        let txs: Vec<f64> = test_idx.iter().map(|&i| grid[i]).collect();
        let tys = txs.iter().map(|&x| control.clean(x).expect("analytic")).collect();
        let ctest = Dataset::from_1d(txs, tys)?;
        let cprobes = ProbeSpec { test: Some(ctest.clone()), ..ProbeSpec::default() };
        let (cnet, crec) = fit_mlp(cfg, &control_model, &loss, &ctrain, &cprobes, seed)?;
        let ctrain_err = mse(&cnet.predict(&ctrain.inputs)?, &ctrain.targets);
        let ctest_err = mse(&cnet.predict(&ctest.inputs)?, &ctest.targets);
        let ratio = ctest_err / ctrain_err;
        control_ok.push(ctrain_err < k.train_target && ctest_err <= k.control_ratio * ctrain_err);
        out.push_run("control", crec);
        out.summary.row(format!(
            "{:>4} {:>7} {:<10} {:<10} {:>9.4}   {:<10} {:<10} {:>6.3}",
            seed,
            last.epoch,
            fmt_num(last.train_loss),
            fmt_num(last.test_loss.unwrap_or(f64::NAN)),
            corr,
            fmt_num(ctrain_err),
            fmt_num(ctest_err),
            ratio
        ));
    }
    out.summary.check(seed_check("parity fits but does not generalize", &parity_ok, cfg.pass_fraction));
    out.summary.check(seed_check("control generalizes", &control_ok, cfg.pass_fraction));
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EarlyStopKnobs {
    test_points: usize,
    /// Grid on which the dominant angular frequency is read off.
    peak_grid_points: usize,
    peak_max_omega: f64,
    peak_scan_step: f64,
    peak_tolerance: f64,
}

pub fn early_stop_defaults() -> ExperimentConfig {
    ExperimentConfig {
        name: "early-stop".into(),
        seeds: (0..5).collect(),
        out_dir: None,
        pass_fraction: 0.7,
        samples: 300,
        target: TargetSpec::NoisyLowfreq { lo: -10.0, hi: 10.0, sigma: 0.5 },
        model: ModelSpec::new(&[1, 200, 200, 1], ActivationKind::Tanh, InitScheme::Gaussian { std: 0.1 }),
        loss: LossChoice::Mse,
        optimizer: OptimizerSpec::adam(1e-3),
        schedule: Schedule::every(4000, 50),
        probe: ProbeConfig { keys: vec![0.5], threshold: 0.1, deltas: Vec::new() },
        knobs: knob_table(&EarlyStopKnobs { test_points: 6000, peak_grid_points: 1000, peak_max_omega: 6.0, peak_scan_step: 0.01, peak_tolerance: 0.2 }),
    }
}

fn dominant_omega(xs: &[f64], ys: &[f64], max_omega: f64, step: f64) -> ExpResult<f64> {
    let omegas: Vec<f64> = (1..=(max_omega / step).floor() as usize).map(|j| j as f64 * step).collect();
    let s = nudft_angular(xs, ys, &omegas)?;
    let mags = s.magnitudes();
    let i = (0..mags.len()).fold(0, |b, i| if mags[i] > mags[b] { i } else { b });
    Ok(omegas[i])
}

pub fn run_early_stop(cfg: &ExperimentConfig, out: &mut Outcome) -> ExpResult<()> {
    let k: EarlyStopKnobs = cfg.knobs()?;
    let (lo, hi) = cfg.target.domain().ok_or_else(|| ExpError::Config("early-stop needs a 1-d analytic target".into()))?;
    let loss = cfg.loss.data_loss()?;
    let grid = linspace(lo, hi, k.peak_grid_points);
    let clean: Vec<f64> = grid.iter().map(|&x| cfg.target.clean(x).expect("analytic")).collect();
    let clean_peak = dominant_omega(&grid, &clean, k.peak_max_omega, k.peak_scan_step)?;
    out.summary.header = format!("{:>4} {:>8} {:<10} {:<10} {:>8} {:>8}", "seed", "turn", "test_min", "test_end", "peak", "clean");
    let mut flags = Vec::new();
    for &seed in &cfg.seeds {
        let train = make_target(&cfg.target, cfg.samples, seed)?.to_dataset()?;
        let test = make_target(&cfg.target, k.test_points, seed.wrapping_add(0x5EED_0000))?.to_dataset()?;
        let probes = ProbeSpec {
            spectral: Some(train_probe(&train, Transform::Angular { omegas: cfg.probe.keys.clone() })),
            test: Some(test),
            ..ProbeSpec::default()
        };
        let (_, rec) = fit_mlp(cfg, &cfg.model, &loss, &train, &probes, seed)?;
        let losses: Vec<(u64, f64)> = rec.epochs.iter().filter_map(|e| e.test_loss.map(|t| (e.epoch, t))).collect();
        let best = (0..losses.len()).fold(0, |b, i| if losses[i].1 < losses[b].1 { i } else { b });
        let interior = best > 0 && best + 1 < losses.len();
        let turn = losses[best].0;
        // training is deterministic, so a rerun stopped at the turn reproduces that state
        let mut short = cfg.clone();
        short.schedule = Schedule::every(turn, turn.max(1));
        let (net, _) = fit_mlp(&short, &cfg.model, &loss, &train, &ProbeSpec::default(), seed)?;
        let peak = dominant_omega(&grid, &net.predict(&grid)?, k.peak_max_omega, k.peak_scan_step)?;
        let matched = (peak - clean_peak).abs() <= k.peak_tolerance * clean_peak;
        out.summary.row(format!(
            "{:>4} {:>8} {:<10} {:<10} {:>8.3} {:>8.3}",
            seed,
            fmt_t(Some(turn)),
            fmt_num(losses[best].1),
            fmt_num(losses.last().map_or(f64::NAN, |l| l.1)),
            peak,
            clean_peak
        ));
        flags.push(interior && matched);
        out.push_run("noisy", rec);
    }
    out.summary.check(seed_check("interior turn, low-frequency output", &flags, cfg.pass_fraction));
    Ok(())
}
