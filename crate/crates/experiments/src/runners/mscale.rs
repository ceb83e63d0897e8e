//! Multi-scale network against an equal-parameter plain network on a two-tone target.

use fplab_core::mscale::{build_mscale, MscaleSpec, MscaleVariant};
use fplab_core::nn::{train, ActivationKind, InitScheme, Model, OptimizerSpec, ProbeSpec, Schedule, StopRule, Transform};
use serde::{Deserialize, Serialize};

use super::{fit_mlp, meta, train_probe, Outcome};
use crate::config::{knob_table, ExperimentConfig, LossChoice, ModelSpec, ProbeConfig};
use crate::error::{ExpError, ExpResult};
use crate::summary::{crossings, fmt_num, fmt_ts, median, t_or_inf, Check};
use crate::target::{make_target, TargetSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MscaleKnobs {
    scales: Vec<f64>,
    variant: MscaleVariant,
    /// Required ratio of median crossing epochs, multi-scale over plain.
    max_ratio: f64,
}

pub fn mscale_defaults() -> ExperimentConfig {
    let mut schedule = Schedule::every(8000, 10);
    schedule.stop = Some(StopRule::AllBelow { threshold: 0.2 });
    ExperimentConfig {
        name: "mscale-two-tone".into(),
        seeds: (0..5).collect(),
        out_dir: None,
        pass_fraction: 0.7,
        samples: 401,
        target: TargetSpec::TwoTone { lo: -3.14, hi: 3.14 },
        model: ModelSpec::new(&[1, 120, 120, 1], ActivationKind::Compact, InitScheme::Gaussian { std: 0.05 }),
        loss: LossChoice::Mse,
        optimizer: OptimizerSpec::adam(5e-3),
        schedule,
        probe: ProbeConfig { keys: vec![1.0, 20.0], threshold: 0.2, deltas: Vec::new() },
        knobs: knob_table(&MscaleKnobs { scales: MscaleSpec::power_of_two_scales(6), variant: MscaleVariant::ScaledGroups, max_ratio: 0.5 }),
    }
}

pub fn run_mscale(cfg: &ExperimentConfig, out: &mut Outcome) -> ExpResult<()> {
    let k: MscaleKnobs = cfg.knobs()?;
    let key = *cfg.probe.keys.iter().max_by(|a, b| a.total_cmp(b)).ok_or_else(|| ExpError::Config("no probe keys".into()))?;
    let data = make_target(&cfg.target, cfg.samples, 0)?.to_dataset()?;
    let loss = cfg.loss.data_loss()?;
    let probes = ProbeSpec { spectral: Some(train_probe(&data, Transform::Angular { omegas: cfg.probe.keys.clone() })), ..ProbeSpec::default() };
    let spec = MscaleSpec { scales: k.scales.clone(), widths: cfg.model.widths.clone(), activation: cfg.model.activation, variant: k.variant, init: cfg.model.init };
    let keys: Vec<String> = cfg.probe.keys.iter().map(|k| format!("{:>8}", format!("T({k})"))).collect();
    out.summary.header = format!("{:<8} {:>4} {:>7} {}  final_loss", "net", "seed", "params", keys.join(" "));
    let (mut t_m, mut t_v) = (Vec::new(), Vec::new());
    for &seed in &cfg.seeds {
        let mut m = build_mscale(&spec, seed)?;
        let mrec = train(&mut m, &data, &loss, &cfg.optimizer, &cfg.schedule, &probes, &meta(cfg, seed))?;
        let (v, vrec) = fit_mlp(cfg, &cfg.model, &loss, &data, &probes, seed)?;
        for (label, rec, params) in [("mscale", &mrec, m.num_params()), ("plain", &vrec, v.num_params())] {
            let ts = crossings(rec, &cfg.probe.keys, cfg.probe.threshold);
            let last = rec.final_epoch().map_or(f64::NAN, |e| e.train_loss);
            out.summary.row(format!("{label:<8} {seed:>4} {params:>7} {}  {}", fmt_ts(&ts), fmt_num(last)));
        }
        t_m.push(t_or_inf(mrec.first_crossing(key, cfg.probe.threshold)));
        t_v.push(t_or_inf(vrec.first_crossing(key, cfg.probe.threshold)));
        out.push_run("mscale", mrec);
        out.push_run("plain", vrec);
    }
    let (mm, mv) = (median(&t_m), median(&t_v));
    out.summary.check(Check::new(
        format!("mscale reaches T({key}) faster"),
        mm.is_finite() && mm <= k.max_ratio * mv,
        format!("median {mm} vs {mv} epochs (need ratio <= {})", k.max_ratio),
    ));
    Ok(())
}
