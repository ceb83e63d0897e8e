//! Poisson experiments: network against Jacobi, and the network-then-Jacobi scheme.

use fplab_core::freq::nudft_angular;
use fplab_core::nn::{ActivationKind, InitScheme, OptimizerSpec, Schedule, StopRule};
use fplab_core::pde::{
    dnn_poisson_solve, hybrid_solve, jacobi_run, jacobi_until, poisson_reference, reference_system, resolved_peaks, DnnPoissonConfig,
    PoissonLoss, PoissonReference,
};
use serde::{Deserialize, Serialize};

use super::{meta, Outcome};
use crate::config::{knob_table, ExperimentConfig, LossChoice, ModelSpec, ProbeConfig};
use crate::error::{ExpError, ExpResult};
use crate::summary::{crossings, fmt_num, fmt_t, fmt_ts, seed_check, t_or_inf, Check};
use crate::target::TargetSpec;

fn base(name: &str, schedule: Schedule, keys: Vec<f64>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        seeds: (0..10).collect(),
        out_dir: None,
        pass_fraction: 0.7,
        samples: 201,
        target: TargetSpec::PoissonG,
        model: ModelSpec::new(&[1, 256, 128, 1], ActivationKind::Tanh, InitScheme::Gaussian { std: 0.1 }),
        loss: LossChoice::Ritz { beta: 10.0 },
        optimizer: OptimizerSpec::adam(1e-3),
        schedule,
        probe: ProbeConfig { keys, threshold: 0.1, deltas: Vec::new() },
        knobs: toml::Table::new(),
    }
}

fn reference(cfg: &ExperimentConfig) -> ExpResult<PoissonReference> {
    if cfg.target != TargetSpec::PoissonG {
        return Err(ExpError::Config(format!("{} solves the reference Poisson problem; target must be poisson_g", cfg.name)));
    }
    Ok(poisson_reference(&PoissonReference::default_terms())?)
}

fn solver_config(cfg: &ExperimentConfig, r: &PoissonReference, peaks: Vec<f64>) -> ExpResult<DnnPoissonConfig> {
    let mut d = DnnPoissonConfig::evenly_spaced(r, cfg.samples, cfg.optimizer, cfg.schedule.clone());
    (d.loss, d.beta) = match cfg.loss {
        LossChoice::Ritz { beta } => (PoissonLoss::Ritz, beta),
        LossChoice::Lse { beta } => (PoissonLoss::Lse, beta),
        other => return Err(ExpError::Config(format!("{} needs a ritz or lse loss, got {}", cfg.name, other.name()))),
    };
    d.peaks = peaks;
    Ok(d)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DnnJacobiKnobs {
    /// Number of resolved peaks of `|û_ref|` used for the ordering.
    peak_count: usize,
    peak_max_omega: f64,
    peak_scan_step: f64,
    /// Jacobi grid size and iteration budget.
    jacobi_n: usize,
    jacobi_iterations: u64,
}

pub fn dnn_vs_jacobi_defaults() -> ExperimentConfig {
    let mut c = base("poisson-dnn-vs-jacobi", Schedule::every(1500, 10), vec![1.0, 4.0, 8.0, 24.0]);
    c.knobs = knob_table(&DnnJacobiKnobs { peak_count: 3, peak_max_omega: 40.0, peak_scan_step: 0.05, jacobi_n: 201, jacobi_iterations: 8000 });
    c
}

/// Jacobi sine mode `k` on an `n`-cell grid of `[−1, 1]` has angular frequency `kπ/2`.
/// Sine mode `k` on (−1, 1) has angular frequency `kπ/2`. Picks the mode nearest `omega`
/// among those carrying at least `1e-8` of the largest initial coefficient; symmetry of the
/// solution leaves the others at roundoff level.
fn nearest_mode(omega: f64, initial: &[f64]) -> Option<usize> {
    let top = initial.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let dist = |k: usize| (k as f64 * std::f64::consts::FRAC_PI_2 - omega).abs();
    (1..=initial.len()).filter(|&k| initial[k - 1].abs() > 1e-8 * top).min_by(|&a, &b| dist(a).total_cmp(&dist(b)))
}

pub fn run_dnn_vs_jacobi(cfg: &ExperimentConfig, out: &mut Outcome) -> ExpResult<()> {
    let k: DnnJacobiKnobs = cfg.knobs()?;
    let r = reference(cfg)?;
    let probe_cfg = DnnPoissonConfig::evenly_spaced(&r, cfg.samples, cfg.optimizer, cfg.schedule.clone());
    let peaks = resolved_peaks(&r, &probe_cfg.interior, k.peak_count, k.peak_max_omega, k.peak_scan_step)?;
    if peaks.len() < 2 {
        return Err(ExpError::Config("fewer than two resolved peaks".into()));
    }
    let mut keys: Vec<f64> = cfg.probe.keys.iter().chain(&peaks).copied().collect();
    keys.sort_by(f64::total_cmp);
    keys.dedup();
    let scan: Vec<f64> = (1..=(k.peak_max_omega / k.peak_scan_step) as usize).map(|j| j as f64 * k.peak_scan_step).collect();
    let values: Vec<f64> = probe_cfg.interior.iter().map(|&x| r.eval(x)).collect();
    out.spectrum("spectrum-reference.csv".into(), nudft_angular(&probe_cfg.interior, &values, &scan)?);
    let peak_names: Vec<String> = peaks.iter().map(|p| format!("{:>8}", format!("T({p:.2})"))).collect();
    let key_names: Vec<String> = cfg.probe.keys.iter().map(|p| format!("{:>8}", format!("T({p})"))).collect();
    out.summary.header = format!("{:<8} {:>4} {}  {}  ordered", "solver", "seed", peak_names.join(" "), key_names.join(" "));
    out.summary.note(format!("resolved peaks of |u_ref|: {peaks:?}"));

    let solver = solver_config(cfg, &r, keys)?;
    let mut flags = Vec::new();
    for &seed in &cfg.seeds {
        let mut net = cfg.model.build(seed)?;
        let rec = dnn_poisson_solve(&mut net, &r, &solver, &meta(cfg, seed))?;
        let tp = crossings(&rec, &peaks, cfg.probe.threshold);
        let tk = crossings(&rec, &cfg.probe.keys, cfg.probe.threshold);
        let ok = tp[0].is_some() && tp[1].is_some() && tp.windows(2).enumerate().all(|(i, w)| {
            if i == 0 {
                t_or_inf(w[0]) < t_or_inf(w[1])
            } else {
                t_or_inf(w[0]) <= t_or_inf(w[1])
            }
        });
        out.summary.row(format!("{:<8} {:>4} {}  {}  {ok}", "dnn", seed, fmt_ts(&tp), fmt_ts(&tk)));
        flags.push(ok);
        out.push_run("dnn", rec);
    }
    out.summary.check(seed_check("dnn low frequency first", &flags, cfg.pass_fraction));

    let sys = reference_system(k.jacobi_n, &r)?;
    let run = jacobi_run(&sys, &vec![0.0; sys.size()], k.jacobi_iterations, 1)?;
    let initial = run.trace.coeffs.first().cloned().unwrap_or_default();
    let modes: Vec<usize> = peaks.iter().filter_map(|&p| nearest_mode(p, &initial)).collect();
    if modes.len() != peaks.len() || peaks.iter().any(|&p| p >= k.jacobi_n as f64 * std::f64::consts::FRAC_PI_2) {
        return Err(ExpError::Config(format!("jacobi grid n = {} cannot represent peaks {peaks:?}", k.jacobi_n)));
    }
    let tj: Vec<Option<u64>> = modes.iter().map(|&m| run.trace.iterations_to_threshold(m, cfg.probe.threshold)).collect();
    out.summary.row(format!("{:<8} {:>4} {}  modes {modes:?}", "jacobi", "-", fmt_ts(&tj)));
    let reversed = tj.iter().all(Option::is_some) && tj.windows(2).all(|w| w[0] > w[1]);
    out.summary.check(Check::new(
        "jacobi high frequency first",
        reversed,
        format!("iterations {}", tj.iter().map(|t| fmt_t(*t)).collect::<Vec<_>>().join(" > ")),
    ));
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HybridKnobs {
    grid_n: usize,
    jacobi_target: f64,
    jacobi_max_iterations: u64,
}

pub fn hybrid_defaults() -> ExperimentConfig {
    let mut schedule = Schedule::every(3000, 10);
    schedule.stop = Some(StopRule::AllBelow { threshold: 0.2 });
    let mut c = base("hybrid", schedule, vec![1.0, 4.0, 8.0]);
    c.seeds = (0..5).collect();
    c.probe.threshold = 0.2;
    c.knobs = knob_table(&HybridKnobs { grid_n: 1001, jacobi_target: 1e-2, jacobi_max_iterations: 3_000_000 });
    c
}

pub fn run_hybrid(cfg: &ExperimentConfig, out: &mut Outcome) -> ExpResult<()> {
    let k: HybridKnobs = cfg.knobs()?;
    let r = reference(cfg)?;
    let sys = reference_system(k.grid_n, &r)?;
    let exact: Vec<f64> = sys.nodes.iter().map(|&x| r.eval(x)).collect();
    let zero = jacobi_until(&sys, &vec![0.0; sys.size()], &exact, k.jacobi_max_iterations, Some(k.jacobi_target))?;
    out.summary.header = format!("{:<6} {:>4} {:>8} {:<10} {:>12}", "start", "seed", "M", "dnn_error", "iterations");
    out.summary.row(format!("{:<6} {:>4} {:>8} {:<10} {:>12}", "zero", "-", "-", "-", fmt_t(zero.reached_at)));
    let solver = solver_config(cfg, &r, cfg.probe.keys.clone())?;
    let mut flags = Vec::new();
    for &seed in &cfg.seeds {
        let mut net = cfg.model.build(seed)?;
        let h = hybrid_solve(&mut net, &r, &solver, &sys, k.jacobi_max_iterations, Some(k.jacobi_target), &meta(cfg, seed))?;
        let m = h.dnn.final_epoch().map(|e| e.epoch);
        let stopped = h.dnn.final_epoch().is_some_and(|e| e.delta_f.iter().all(|d| *d < cfg.probe.threshold));
        let err = h.dnn_errors.last().map_or(f64::NAN, |e| e.1);
        out.summary.row(format!("{:<6} {:>4} {:>8} {:<10} {:>12}", "dnn", seed, fmt_t(m), fmt_num(err), fmt_t(h.jacobi.reached_at)));
        flags.push(stopped && t_or_inf(h.jacobi.reached_at) < t_or_inf(zero.reached_at));
        out.push_run("dnn", h.dnn);
    }
    out.summary.check(seed_check("hybrid needs fewer iterations", &flags, cfg.pass_fraction));
    Ok(())
}
