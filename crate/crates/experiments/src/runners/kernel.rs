//! Kernel-regime experiments: Gram eigenvector frequency and LFP dynamics against a wide network.

use fplab_core::freq::nudft;
use fplab_core::nn::{train, ActivationKind, InitScheme, LossSpec, OptimizerSpec, ProbeSpec, RecordCadence, Schedule};
use fplab_core::ntk::{eigen, eigvec_zero_crossings, empirical_gram, fit_rate_constants, lfp_evolve, FreqGrid, LfpKernel, LfpModel};
use serde::{Deserialize, Serialize};

use super::{meta, Outcome};
use crate::config::{knob_table, ExperimentConfig, LossChoice, ModelSpec, ProbeConfig};
use crate::error::{ExpError, ExpResult};
use crate::summary::{fmt_num, seed_check, spearman};
use crate::target::{linspace, make_target, TargetSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EigenKnobs {
    top: usize,
    min_spearman: f64,
}

pub fn ntk_eigen_defaults() -> ExperimentConfig {
    ExperimentConfig {
        name: "ntk-eigen".into(),
        seeds: (0..3).collect(),
        out_dir: None,
        pass_fraction: 0.7,
        samples: 64,
        target: TargetSpec::TwoSine { lo: -1.0, hi: 1.0 },
        model: ModelSpec::new(&[1, 4096, 1], ActivationKind::Relu, InitScheme::Ntk),
        loss: LossChoice::Mse,
        optimizer: OptimizerSpec::gd(1.0),
        schedule: Schedule::every(0, 1),
        probe: ProbeConfig { keys: Vec::new(), threshold: 0.1, deltas: Vec::new() },
        knobs: knob_table(&EigenKnobs { top: 20, min_spearman: 0.7 }),
    }
}

fn domain_points(cfg: &ExperimentConfig) -> ExpResult<Vec<f64>> {
    let (lo, hi) = cfg.target.domain().ok_or_else(|| ExpError::Config("kernel experiments need an interval target".into()))?;
    Ok(linspace(lo, hi, cfg.samples))
}

pub fn run_ntk_eigen(cfg: &ExperimentConfig, out: &mut Outcome) -> ExpResult<()> {
    let k: EigenKnobs = cfg.knobs()?;
    let xs = domain_points(cfg)?;
    let top = k.top.min(xs.len());
    out.summary.header = format!("{:>4}  spearman  lambda_1  lambda_{top}  crossings", "seed");
    let mut flags = Vec::new();
    for &seed in &cfg.seeds {
        let net = cfg.model.build(seed)?;
        let gram = empirical_gram(&net, &xs)?;
        let crossings = gram.eigen.vectors[..top].iter().map(|v| eigvec_zero_crossings(v, &xs).map(|c| c as f64)).collect::<Result<Vec<_>, _>>()?;
        let rank: Vec<f64> = (0..top).map(|i| i as f64).collect();
        let rho = spearman(&rank, &crossings);
        let shown: Vec<String> = crossings.iter().map(|c| c.to_string()).collect();
        out.summary.row(format!(
            "{seed:>4}  {rho:>8.4}  {}  {}  {}",
            fmt_num(gram.eigen.values[0]),
            fmt_num(gram.eigen.values[top - 1]),
            shown.join(" ")
        ));
        flags.push(rho >= k.min_spearman);
    }
    out.summary.check(seed_check(&format!("spearman >= {}", k.min_spearman), &flags, cfg.pass_fraction));
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LfpKnobs {
    /// Learning rate as a fraction of `2/λ_max` of `(2/n)K` at initialization; replaces the configured rate.
    step_fraction: f64,
    /// Length of the initial run whose per-frequency decay fixes `C1` and `C2`.
    fit_epochs: u64,
    /// Highest fitted frequency as a fraction of the sampling Nyquist frequency `n/(2·span)`.
    fit_band: f64,
    match_epochs: Vec<u64>,
    eval_points: usize,
    /// LFP time step as a fraction of `1/λ_max` of its discrete operator.
    lfp_step_fraction: f64,
    max_relative_l2: f64,
}

pub fn lfp_defaults() -> ExperimentConfig {
    ExperimentConfig {
        name: "lfp-vs-training".into(),
        seeds: vec![0],
        out_dir: None,
        pass_fraction: 1.0,
        samples: 64,
        target: TargetSpec::TwoSine { lo: -3.14, hi: 3.14 },
        model: ModelSpec::new(&[1, 16384, 1], ActivationKind::Relu, InitScheme::NtkLayered { weight_std: 1.0, bias_std: 10.0, output_std: 1.0 }),
        loss: LossChoice::Mse,
        optimizer: OptimizerSpec::gd(1.0),
        schedule: Schedule { epochs: 0, record: RecordCadence::LogSpaced { per_decade: 10 }, stop: None, snapshots: Vec::new() },
        probe: ProbeConfig { keys: Vec::new(), threshold: 0.1, deltas: Vec::new() },
        knobs: knob_table(&LfpKnobs {
            step_fraction: 0.5,
            fit_epochs: 1,
            fit_band: 0.5,
            match_epochs: vec![10, 100, 1000, 3000, 10000],
            eval_points: 401,
            lfp_step_fraction: 0.5,
            max_relative_l2: 0.1,
        }),
    }
}

fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn max_eigenvalue(matrix: &[f64], n: usize) -> ExpResult<f64> {
    Ok(eigen(matrix, n)?.values[0])
}

pub fn run_lfp(cfg: &ExperimentConfig, out: &mut Outcome) -> ExpResult<()> {
    let k: LfpKnobs = cfg.knobs()?;
    let (lo, hi) = cfg.target.domain().ok_or_else(|| ExpError::Config("lfp-vs-training needs an interval target".into()))?;
    let span = hi - lo;
    let data = make_target(&cfg.target, cfg.samples, 0)?.to_dataset()?;
    let n = data.len();
    let eval = linspace(lo, hi, k.eval_points);
    let grid = FreqGrid::default_for_span(span);
    let freqs = grid.frequencies()?;
    let band = k.fit_band * n as f64 / (2.0 * span);
    let fit_freqs: Vec<f64> = freqs.iter().copied().filter(|&f| f > 0.0 && f <= band).collect();
    let horizon = k.match_epochs.iter().copied().max().unwrap_or(0).max(k.fit_epochs);

    out.summary.header = format!("{:>4} {:>7}  rel_l2", "seed", "epoch");
    let mut flags = Vec::new();
    for &seed in &cfg.seeds {
        let mut net = cfg.model.build(seed)?;
        let gram = empirical_gram(&net, &data.inputs)?;
        let lambda = 2.0 / n as f64 * gram.eigen.values[0];
        let eta = k.step_fraction * 2.0 / lambda;
        let opt = OptimizerSpec { learning_rate: eta, ..cfg.optimizer };
        let mut snaps: Vec<u64> = k.match_epochs.clone();
        snaps.push(0);
        snaps.push(k.fit_epochs);
        snaps.sort_unstable();
        snaps.dedup();
        let probes = ProbeSpec { snapshot_inputs: Some([data.inputs.clone(), eval.clone()].concat()), ..ProbeSpec::default() };
        let schedule = Schedule { epochs: horizon, snapshots: snaps, ..cfg.schedule.clone() };
        let rec = train(&mut net, &data, &LossSpec::mse(), &opt, &schedule, &probes, &meta(cfg, seed))?;
        let at = |e: u64| rec.snapshots.iter().find(|s| s.epoch == e).map(|s| s.outputs.clone());
        let h0 = at(0).ok_or_else(|| ExpError::Config("missing initial snapshot".into()))?;
        let (h0_data, h0_eval) = h0.split_at(n);
        let u0: Vec<f64> = h0_data.iter().zip(&data.targets).map(|(h, y)| h - y).collect();

        // per-frequency decay of the data-weighted residual spectrum over the fit window
        let hf = at(k.fit_epochs).ok_or_else(|| ExpError::Config("missing fit snapshot".into()))?;
        let uf: Vec<f64> = hf[..n].iter().zip(&data.targets).map(|(h, y)| h - y).collect();
        let s0 = nudft(&data.inputs, &u0, &fit_freqs)?;
        let s1 = nudft(&data.inputs, &uf, &fit_freqs)?;
        let t_fit = eta * k.fit_epochs as f64;
        let rates: Vec<f64> = s0.amps.iter().zip(&s1.amps).map(|(a, b)| -span * ((b - a) * a.conj()).re / (t_fit * a.norm_sqr().max(f64::MIN_POSITIVE))).collect();
        let weights: Vec<f64> = s0.amps.iter().map(|a| a.norm_sqr()).collect();
        let gamma = fit_rate_constants(&fit_freqs, &rates, &weights, 1)?;
        out.summary.note(format!("seed {seed}: lr {}, C1 {}, C2 {}", fmt_num(eta), fmt_num(gamma.c1), fmt_num(gamma.c2)));

        let kernel = LfpKernel::new(gamma, grid)?;
        let kmat: Vec<f64> = kernel.matrix(&data.inputs, &data.inputs).iter().map(|v| v / n as f64).collect();
        let dt_max = k.lfp_step_fraction / max_eigenvalue(&kmat, n)?;
        let lfp = LfpModel { gamma, grid, points: data.inputs.clone() };
        let mut ok = true;
        for &e in &k.match_epochs {
            let t = eta * e as f64;
            let steps = ((t / dt_max).ceil() as usize).max(1);
            let traj = lfp_evolve(&lfp, &u0, t / steps as f64, steps, steps)?;
            let predicted = traj.displacement_at(traj.times.len() - 1, &eval);
            let he = at(e).ok_or_else(|| ExpError::Config(format!("missing snapshot at epoch {e}")))?;
            let actual: Vec<f64> = he[n..].iter().zip(h0_eval).map(|(a, b)| a - b).collect();
            let err = if traj.unstable { f64::INFINITY } else { relative_l2(&predicted, &actual) };
            out.summary.row(format!("{seed:>4} {e:>7}  {}", fmt_num(err)));
            ok &= err <= k.max_relative_l2;
            if seed == cfg.seeds[0] {
                out.curves(&format!("displacement-epoch{e}.csv"), &eval, &[("network", &actual), ("lfp", &predicted)]);
            }
        }
        flags.push(ok);
        out.push_run("wide", rec);
    }
    out.summary.check(seed_check(&format!("lfp within {} relative l2", k.max_relative_l2), &flags, cfg.pass_fraction));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_l2_of_scaled_copy() {
        let b = [1.0, -2.0, 2.0];
        let a: Vec<f64> = b.iter().map(|v| 1.1 * v).collect();
        assert!((relative_l2(&a, &b) - 0.1).abs() < 1e-12);
    }
}
