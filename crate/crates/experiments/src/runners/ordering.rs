//! Convergence-order experiments on 1-d analytic targets.

use fplab_core::freq::dft_uniform;
use fplab_core::nn::{ActivationKind, Dataset, InitScheme, OptimizerSpec, ProbeSpec, Schedule, StopRule, Transform};
use serde::{Deserialize, Serialize};

use super::{bins, final_outputs, fit_mlp, train_probe, Outcome};
use crate::config::{knob_table, ExperimentConfig, LossChoice, ModelSpec, ProbeConfig};
use crate::error::{ExpError, ExpResult};
use crate::summary::{crossings, fmt_num, fmt_ts, fraction, median, seed_check, strictly_ordered, t_or_inf, total_variation, Check};
use crate::target::{linspace, make_target, TargetSpec};

fn base(name: &str) -> ExperimentConfig {
    let mut schedule = Schedule::every(6000, 10);
    schedule.stop = Some(StopRule::AllBelow { threshold: 0.1 });
    ExperimentConfig {
        name: name.into(),
        seeds: (0..10).collect(),
        out_dir: None,
        pass_fraction: 0.7,
        samples: 201,
        target: TargetSpec::ThreeSine { lo: -3.14, hi: 3.14 },
        model: ModelSpec::new(&[1, 200, 200, 1], ActivationKind::Tanh, InitScheme::Gaussian { std: 0.1 }),
        loss: LossChoice::Mse,
        optimizer: OptimizerSpec::adam(5e-4),
        schedule,
        probe: ProbeConfig { keys: vec![1.0, 3.0, 5.0], threshold: 0.1, deltas: Vec::new() },
        knobs: toml::Table::new(),
    }
}

struct Variant {
    label: String,
    model: ModelSpec,
    loss: LossChoice,
}

struct SeedRun {
    ts: Vec<Option<u64>>,
    /// Outputs on the dense grid at epoch 0 and at the end, when requested.
    grid: Option<(Vec<f64>, Vec<f64>)>,
}

fn training_data(cfg: &ExperimentConfig, with_grads: bool) -> ExpResult<Dataset> {
    let labeled = make_target(&cfg.target, cfg.samples, 0)?;
    let data = labeled.to_dataset()?;
    if !with_grads {
        return Ok(data);
    }
    let grads = data
        .inputs
        .iter()
        .map(|&x| cfg.target.clean_derivative(x))
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| ExpError::Config("gradient loss needs an analytic 1-d target".into()))?;
    Ok(data.with_target_grads(grads)?)
}

/// Runs every seed of `variant`, tracking the configured DFT bins of the training outputs.
fn ordering_runs(cfg: &ExperimentConfig, out: &mut Outcome, v: &Variant, grid: Option<&[f64]>) -> ExpResult<Vec<SeedRun>> {
    let data = training_data(cfg, v.loss == LossChoice::MsePlusGrad)?;
    let loss = v.loss.data_loss()?;
    let probes = ProbeSpec {
        spectral: Some(train_probe(&data, Transform::UniformBins { bins: bins(&cfg.probe.keys) })),
        snapshot_inputs: grid.map(<[f64]>::to_vec),
        ..ProbeSpec::default()
    };
    let mut cfg = cfg.clone();
    if grid.is_some() {
        cfg.schedule.snapshots = vec![0];
    }
    let mut runs = Vec::new();
    for (i, &seed) in cfg.seeds.iter().enumerate() {
        let (net, record) = fit_mlp(&cfg, &v.model, &loss, &data, &probes, seed)?;
        let ts = crossings(&record, &cfg.probe.keys, cfg.probe.threshold);
        let last = record.final_epoch().map_or(f64::NAN, |e| e.train_loss);
        out.summary.row(format!("{:<14} {:>4} {}  {}  {}", v.label, seed, fmt_ts(&ts), fmt_num(last), strictly_ordered(&ts)));
        if i == 0 {
            let fitted = net_outputs(&net, &data)?;
            out.spectrum(format!("spectrum-{}-seed{seed}.csv", v.label), dft_uniform(&fitted).one_sided());
        }
        let grid_out = match grid {
            Some(g) => {
                let first = record.snapshots.first().filter(|s| s.epoch == 0).map(|s| s.outputs.clone());
                let first = first.ok_or_else(|| ExpError::Config("missing epoch-0 snapshot".into()))?;
                Some((first, final_outputs(&net, &record, g)?))
            }
            None => None,
        };
        out.push_run(&v.label, record);
        runs.push(SeedRun { ts, grid: grid_out });
    }
    Ok(runs)
}

fn net_outputs(net: &fplab_core::nn::MlpNetwork, data: &Dataset) -> ExpResult<Vec<f64>> {
    use fplab_core::nn::Model;
    Ok(net.predict(&data.inputs)?)
}

fn header(out: &mut Outcome, cfg: &ExperimentConfig) -> ExpResult<()> {
    let keys: Vec<String> = cfg.probe.keys.iter().map(|k| format!("{:>8}", format!("T({k})"))).collect();
    out.summary.header = format!("{:<14} {:>4} {}  {:<10}  ordered", "variant", "seed", keys.join(" "), "final_loss");
    let target = make_target(&cfg.target, cfg.samples, 0)?;
    out.spectrum("spectrum-target.csv".into(), dft_uniform(&target.targets).one_sided());
    Ok(())
}

fn ordered_flags(runs: &[SeedRun]) -> Vec<bool> {
    runs.iter().map(|r| strictly_ordered(&r.ts)).collect()
}

pub fn fp_1d_defaults() -> ExperimentConfig {
    base("fp-1d")
}

pub fn run_fp_1d(cfg: &ExperimentConfig, out: &mut Outcome) -> ExpResult<()> {
    header(out, cfg)?;
    let v = Variant { label: "tanh".into(), model: cfg.model.clone(), loss: cfg.loss };
    let runs = ordering_runs(cfg, out, &v, None)?;
    out.summary.check(seed_check("low-frequency-first", &ordered_flags(&runs), cfg.pass_fraction));
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RickerKnobs {
    /// Width with the expected ordering.
    a_smooth: f64,
    /// Width expected to break the ordering.
    a_rough: f64,
    /// Dense test grid size for the total-variation comparison.
    test_points: usize,
}

pub fn ricker_defaults() -> ExperimentConfig {
    let mut c = base("ricker-flip");
    c.model.activation = ActivationKind::Ricker { a: 0.3 };
    c.knobs = knob_table(&RickerKnobs { a_smooth: 0.3, a_rough: 0.1, test_points: 1001 });
    c
}

pub fn run_ricker(cfg: &ExperimentConfig, out: &mut Outcome) -> ExpResult<()> {
    let k: RickerKnobs = cfg.knobs()?;
    header(out, cfg)?;
    let (lo, hi) = cfg.target.domain().ok_or_else(|| ExpError::Config("ricker-flip needs a 1-d analytic target".into()))?;
    let grid = linspace(lo, hi, k.test_points);
    let mut results = Vec::new();
    for a in [k.a_smooth, k.a_rough] {
        let mut model = cfg.model.clone();
        model.activation = ActivationKind::Ricker { a };
        let v = Variant { label: format!("ricker-a{a}"), model, loss: cfg.loss };
        results.push(ordering_runs(cfg, out, &v, Some(&grid))?);
    }
    let smooth = ordered_flags(&results[0]);
    let rough = ordered_flags(&results[1]);
    out.summary.check(seed_check(&format!("ordered a={}", k.a_smooth), &smooth, cfg.pass_fraction));
    let frac = fraction(&rough);
    out.summary.check(Check::new(
        format!("not ordered a={}", k.a_rough),
        frac < cfg.pass_fraction,
        format!("{}/{} seeds ordered", rough.iter().filter(|&&f| f).count(), rough.len()),
    ));
    let rougher: Vec<bool> = results[1]
        .iter()
        .map(|r| {
            let (first, last) = r.grid.as_ref().expect("grid requested");
            total_variation(last) > total_variation(first)
        })
        .collect();
    for (r, seed) in results[1].iter().zip(&cfg.seeds) {
        let (first, last) = r.grid.as_ref().expect("grid requested");
        out.summary.note(format!("a={} seed {seed}: total variation {} -> {}", k.a_rough, fmt_num(total_variation(first)), fmt_num(total_variation(last))));
    }
    out.summary.check(seed_check(&format!("rougher output a={}", k.a_rough), &rougher, cfg.pass_fraction));
    Ok(())
}

pub fn grad_loss_defaults() -> ExperimentConfig {
    let mut c = base("grad-loss");
    c.seeds = (0..5).collect();
    c.probe.keys = vec![1.0, 5.0];
    c
}

pub fn run_grad_loss(cfg: &ExperimentConfig, out: &mut Outcome) -> ExpResult<()> {
    if cfg.probe.keys.len() < 2 {
        return Err(ExpError::Config("grad-loss compares the first and last probe keys".into()));
    }
    header(out, cfg)?;
    let mut medians = Vec::new();
    for loss in [LossChoice::Mse, LossChoice::MsePlusGrad] {
        let v = Variant { label: loss.name().into(), model: cfg.model.clone(), loss };
        let runs = ordering_runs(cfg, out, &v, None)?;
        let ratios: Vec<f64> = runs.iter().map(|r| t_or_inf(*r.ts.last().unwrap()) / t_or_inf(r.ts[0]).max(1.0)).collect();
        let m = median(&ratios);
        out.summary.note(format!("{}: median T(high)/T(low) = {m:.4}", loss.name()));
        medians.push(m);
    }
    out.summary.check(Check::new(
        "gradient loss lowers T(high)/T(low)",
        medians[1] < medians[0],
        format!("{:.4} vs {:.4}", medians[1], medians[0]),
    ));
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AntiFpKnobs {
    small_std: f64,
    large_std: f64,
}

pub fn anti_fp_defaults() -> ExperimentConfig {
    let mut c = base("anti-fp-large-init");
    c.knobs = knob_table(&AntiFpKnobs { small_std: 0.05, large_std: 10.0 });
    c
}

pub fn run_anti_fp(cfg: &ExperimentConfig, out: &mut Outcome) -> ExpResult<()> {
    let k: AntiFpKnobs = cfg.knobs()?;
    header(out, cfg)?;
    let mut flags = Vec::new();
    for std in [k.small_std, k.large_std] {
        let mut model = cfg.model.clone();
        model.init = InitScheme::Gaussian { std };
        let v = Variant { label: format!("std{std}"), model, loss: cfg.loss };
        flags.push(ordered_flags(&ordering_runs(cfg, out, &v, None)?));
    }
    out.summary.check(seed_check(&format!("ordered std={}", k.small_std), &flags[0], cfg.pass_fraction));
    let broken: Vec<bool> = flags[1].iter().map(|f| !f).collect();
    out.summary.check(seed_check(&format!("not ordered std={}", k.large_std), &broken, cfg.pass_fraction));
    Ok(())
}
