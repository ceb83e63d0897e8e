//! High-dimensional diagnostics: 2-d image fitting, projection onto the first principal
//! direction, and Gaussian-filter low/high splits on MNIST digits.

use std::path::PathBuf;

use fplab_core::freq::{default_probe_grid, ComplexSpectrum, nudft, principal_direction, project_dataset, select_peaks, FilteredErrors, GaussianFilter};
use fplab_core::nn::{ActivationKind, FilterProbe, InitScheme, OptimizerSpec, ProbeSpec, Schedule, SpectralProbe, Transform};
use fplab_core::RunRecord;
use serde::{Deserialize, Serialize};

use super::{fit_mlp, Outcome};
use crate::config::{knob_table, ExperimentConfig, LossChoice, ModelSpec, ProbeConfig};
use crate::error::{ExpError, ExpResult};
use crate::summary::{crossings, fmt_num, fmt_ts, seed_check, strictly_ordered, Check};
use crate::target::{make_target, TargetSpec};

fn mnist01() -> TargetSpec {
    TargetSpec::IdxDataset {
        images: PathBuf::from("data/mnist01/images-idx3-ubyte"),
        labels: PathBuf::from("data/mnist01/labels-idx1-ubyte"),
        subset: vec![0, 1],
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImageKnobs {
    snapshots: Vec<u64>,
}

pub fn fp_2d_defaults() -> ExperimentConfig {
    let snapshots = vec![80, 2000, 58000];
    ExperimentConfig {
        name: "fp-2d-image".into(),
        seeds: vec![0],
        out_dir: None,
        pass_fraction: 1.0,
        samples: 1024,
        target: TargetSpec::Image { path: None, size: 32 },
        model: ModelSpec::new(&[2, 64, 32, 1], ActivationKind::Tanh, InitScheme::Gaussian { std: 0.5 }),
        loss: LossChoice::Mse,
        optimizer: OptimizerSpec::adam(1e-3),
        schedule: Schedule::every(58000, 1000),
        probe: ProbeConfig { keys: Vec::new(), threshold: 0.1, deltas: vec![0.05] },
        knobs: knob_table(&ImageKnobs { snapshots }),
    }
}

fn pixel_csv(inputs: &[f64], dim: usize, target: &[f64], output: &[f64]) -> String {
    let mut s = String::from("row,col,target,output\n");
    for ((x, t), h) in inputs.chunks(dim).zip(target).zip(output) {
        s.push_str(&format!("{},{},{t},{h}\n", x[0], x[1]));
    }
    s
}

pub fn run_fp_2d(cfg: &ExperimentConfig, out: &mut Outcome) -> ExpResult<()> {
    let k: ImageKnobs = cfg.knobs()?;
    let data = make_target(&cfg.target, cfg.samples, 0)?.to_dataset()?;
    let loss = cfg.loss.data_loss()?;
    let mut schedule = cfg.schedule.clone();
    schedule.snapshots = k.snapshots.clone();
    let probes = ProbeSpec {
        filter: Some(FilterProbe { dim: data.dim, inputs: data.inputs.clone(), reference: data.targets.clone(), deltas: cfg.probe.deltas.clone() }),
        snapshot_inputs: Some(data.inputs.clone()),
        ..ProbeSpec::default()
    };
    let cfg = ExperimentConfig { schedule, ..cfg.clone() };
    let filters = cfg.probe.deltas.iter().map(|&d| GaussianFilter::new(&data.inputs, data.dim, d)).collect::<Result<Vec<_>, _>>()?;
    let splits = filters.iter().map(|f| f.split(&data.targets)).collect::<Result<Vec<_>, _>>()?;
    out.summary.header = format!("{:>4} {:>7} {:>8}  e_low      e_high     loss", "seed", "epoch", "delta");
    let mut flags = Vec::new();
    for &seed in &cfg.seeds {
        let (_, rec) = fit_mlp(&cfg, &cfg.model, &loss, &data, &probes, seed)?;
        let mut ok = true;
        let last = rec.snapshots.iter().map(|s| s.epoch).max();
        for snap in &rec.snapshots {
            let mse = fplab_core::nn::mse(&snap.outputs, &data.targets);
            for (f, split) in filters.iter().zip(&splits) {
                let e = f.errors(split, &snap.outputs)?;
                out.summary.row(format!("{seed:>4} {:>7} {:>8}  {}  {}  {}", snap.epoch, f.delta(), opt_num(e.e_low), opt_num(e.e_high), fmt_num(mse)));
                if Some(snap.epoch) != last {
                    ok &= low_ahead(&e);
                }
            }
            if seed == cfg.seeds[0] {
                out.artifacts.push(super::Artifact::Text {
                    file: format!("image-epoch{}.csv", snap.epoch),
                    contents: pixel_csv(&data.inputs, data.dim, &data.targets, &snap.outputs),
                });
            }
        }
        flags.push(ok);
        out.push_run("image", rec);
    }
    out.summary.check(seed_check("e_low < e_high at snapshots", &flags, cfg.pass_fraction));
    Ok(())
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), fmt_num)
}

fn low_ahead(e: &FilteredErrors) -> bool {
    matches!((e.e_low, e.e_high), (Some(l), Some(h)) if l < h)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectionKnobs {
    /// Probe grid `{0, ±1/L, …, ±m/L}` on the projected coordinates.
    probe_half_width: usize,
    peak_count: usize,
    /// Peaks below this fraction of the largest probed magnitude are not selected.
    min_peak_fraction: f64,
}

pub fn projection_defaults() -> ExperimentConfig {
    ExperimentConfig {
        name: "fp-mnist-projection".into(),
        seeds: (0..3).collect(),
        out_dir: None,
        pass_fraction: 0.7,
        samples: 2000,
        target: mnist01(),
        model: ModelSpec::new(&[784, 64, 1], ActivationKind::Tanh, InitScheme::Gaussian { std: 0.05 }),
        loss: LossChoice::Mse,
        optimizer: OptimizerSpec::adam(5e-4),
        schedule: Schedule::every(300, 1),
        probe: ProbeConfig { keys: Vec::new(), threshold: 0.1, deltas: Vec::new() },
        knobs: knob_table(&ProjectionKnobs { probe_half_width: 40, peak_count: 3, min_peak_fraction: 0.05 }),
    }
}

pub fn run_projection(cfg: &ExperimentConfig, out: &mut Outcome) -> ExpResult<()> {
    let k: ProjectionKnobs = cfg.knobs()?;
    let data = make_target(&cfg.target, cfg.samples, 0)?.to_dataset()?;
    let loss = cfg.loss.data_loss()?;
    let direction = principal_direction(&data.inputs, data.dim)?;
    let proj = project_dataset(&data.inputs, data.dim, &data.targets, &direction)?;
    let grid: Vec<f64> = default_probe_grid(&proj.coords, k.probe_half_width)?.into_iter().filter(|f| *f > 0.0).collect();
    let spectrum = nudft(&proj.coords, &proj.values, &grid)?;
    let keys = if cfg.probe.keys.is_empty() { prominent_peaks(&spectrum, k.peak_count, k.min_peak_fraction) } else { cfg.probe.keys.clone() };
    out.spectrum("spectrum-projected.csv".into(), spectrum.clone());

    let mags = spectrum.magnitudes();
    let half = mags.len() / 2;
    let (low, high) = (mags[..half].iter().sum::<f64>() / half as f64, mags[half..].iter().sum::<f64>() / (mags.len() - half) as f64);
    out.summary.note(format!("selected keys {keys:?} (units of 1/span along the first principal direction)"));
    out.summary.check(Check::new(
        "low probes dominate",
        low > high,
        format!("mean |y_k| {} on the lower half vs {} on the upper half", fmt_num(low), fmt_num(high)),
    ));

    let probes = ProbeSpec {
        spectral: Some(SpectralProbe {
            dim: data.dim,
            inputs: data.inputs.clone(),
            reference: data.targets.clone(),
            transform: Transform::Along { direction, ks: keys.clone() },
        }),
        ..ProbeSpec::default()
    };
    let shown: Vec<String> = keys.iter().map(|key| format!("{:>9}", format!("T({key:.3})"))).collect();
    out.summary.header = format!("{:>4} {}  final_loss", "seed", shown.join(" "));
    let mut flags = Vec::new();
    for &seed in &cfg.seeds {
        let (_, rec) = fit_mlp(cfg, &cfg.model, &loss, &data, &probes, seed)?;
        let ts = crossings(&rec, &keys, cfg.probe.threshold);
        out.summary.row(format!("{seed:>4} {}  {}", fmt_ts(&ts), final_loss(&rec)));
        flags.push(strictly_ordered(&ts));
        out.push_run("projection", rec);
    }
    out.summary.check(seed_check("selected keys ordered", &flags, cfg.pass_fraction));
    Ok(())
}

/// The `count` largest local maxima whose magnitude is at least `fraction` of the spectrum maximum, ascending.
fn prominent_peaks(spectrum: &ComplexSpectrum, count: usize, fraction: f64) -> Vec<f64> {
    let mags = spectrum.magnitudes();
    let floor = fraction * mags.iter().copied().fold(0.0, f64::max);
    let mag_of = |key: f64| spectrum.keys.iter().position(|k| *k == key).map_or(0.0, |i| mags[i]);
    let mut peaks: Vec<f64> = select_peaks(spectrum, spectrum.len()).into_iter().filter(|&key| mag_of(key) >= floor).collect();
    peaks.sort_by(|a, b| mag_of(*b).total_cmp(&mag_of(*a)));
    peaks.truncate(count);
    peaks.sort_by(f64::total_cmp);
    peaks
}

fn final_loss(rec: &RunRecord) -> String {
    fmt_num(rec.final_epoch().map_or(f64::NAN, |e| e.train_loss))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterKnobs {
    /// `e_low` has plateaued once its remaining drop is below this fraction of its total drop.
    plateau_fraction: f64,
    /// Fraction of recorded epochs before the plateau with `e_low < e_high`.
    min_low_ahead: f64,
}

pub fn filtering_defaults() -> ExperimentConfig {
    ExperimentConfig {
        name: "fp-filtering".into(),
        seeds: (0..3).collect(),
        out_dir: None,
        pass_fraction: 0.7,
        samples: 2000,
        target: mnist01(),
        model: ModelSpec::new(&[784, 64, 1], ActivationKind::Tanh, InitScheme::Gaussian { std: 0.05 }),
        loss: LossChoice::Mse,
        optimizer: OptimizerSpec::adam(5e-4),
        schedule: Schedule::every(600, 1),
        probe: ProbeConfig { keys: Vec::new(), threshold: 0.1, deltas: vec![3.0, 7.0] },
        knobs: knob_table(&FilterKnobs { plateau_fraction: 0.05, min_low_ahead: 0.9 }),
    }
}

/// First recorded index where `e_low` is within `fraction` of its total drop from its final value.
fn plateau_index(e_low: &[f64], fraction: f64) -> usize {
    let (first, last) = (e_low[0], e_low[e_low.len() - 1]);
    let band = fraction * (first - last).max(0.0);
    e_low.iter().position(|&v| v - last <= band).unwrap_or(e_low.len() - 1)
}

pub fn run_filtering(cfg: &ExperimentConfig, out: &mut Outcome) -> ExpResult<()> {
    let k: FilterKnobs = cfg.knobs()?;
    if cfg.probe.deltas.is_empty() {
        return Err(ExpError::Config("fp-filtering needs at least one filter width in probe.deltas".into()));
    }
    let data = make_target(&cfg.target, cfg.samples, 0)?.to_dataset()?;
    let loss = cfg.loss.data_loss()?;
    let probes = ProbeSpec {
        filter: Some(FilterProbe { dim: data.dim, inputs: data.inputs.clone(), reference: data.targets.clone(), deltas: cfg.probe.deltas.clone() }),
        ..ProbeSpec::default()
    };
    out.summary.header = format!("{:>4} {:>6}  plateau  low_ahead  e_low_final  e_high_final", "seed", "delta");
    let mut flags = Vec::new();
    for &seed in &cfg.seeds {
        let (_, rec) = fit_mlp(cfg, &cfg.model, &loss, &data, &probes, seed)?;
        let mut ok = true;
        for (j, &delta) in cfg.probe.deltas.iter().enumerate() {
            let pairs: Vec<(f64, f64)> = rec.epochs.iter().filter_map(|e| Some((e.filtered[j].e_low?, e.filtered[j].e_high?))).collect();
            if pairs.is_empty() {
                ok = false;
                continue;
            }
            let lows: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let p = plateau_index(&lows, k.plateau_fraction);
            let window = &pairs[..p.max(1)];
            let ahead = window.iter().filter(|(l, h)| l < h).count() as f64 / window.len() as f64;
            let (lf, hf) = pairs[pairs.len() - 1];
            out.summary.row(format!("{seed:>4} {delta:>6}  {:>7}  {ahead:>9.3}  {}  {}", rec.epochs[p].epoch, fmt_num(lf), fmt_num(hf)));
            ok &= ahead >= k.min_low_ahead;
        }
        flags.push(ok);
        out.push_run("filtering", rec);
    }
    out.summary.check(seed_check(&format!("e_low < e_high before plateau >= {}", k.min_low_ahead), &flags, cfg.pass_fraction));
    Ok(())
}
