//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//!
//! Positional arguments filter criteria by substring, e.g.
//! `cargo test --release -p fplab-experiments --test acceptance -- jacobi`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use fplab_core::freq::dft_uniform;
use fplab_core::nn::{
    init_network, input_derivatives, loss_and_gradient, loss_value, mse, train, ActivationKind, Architecture,
    BoundarySet, Dataset, DerivOrder, InitScheme, LinearizedModel, LossSpec, MlpNetwork, Model, OptimizerSpec,
    ProbeSpec, RunMeta, Schedule, SourceFn,
};
use fplab_core::ntk::{empirical_gram, lfp_equilibrium, residual_flow, FreqGrid, GammaSpec, LfpKernel};
use fplab_core::pde::{assemble_poisson_1d, jacobi_mode_rate, jacobi_run, sine_mode};
use fplab_experiments::{run_experiment, ExperimentConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<(bool, String), String>;

struct Criterion {
    name: &'static str,
    run: fn() -> Verdict,
}

const ACTIVATIONS: [ActivationKind; 5] = [
    ActivationKind::Tanh,
    ActivationKind::Relu,
    ActivationKind::Ricker { a: 0.7 },
    ActivationKind::Sine,
    ActivationKind::Compact,
];

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

fn losses(dim: usize, rng: &mut ChaCha8Rng) -> Vec<LossSpec> {
    let bpts: Vec<f64> = (0..3 * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let boundary = BoundarySet { dim, inputs: bpts, values: vec![0.3, -0.2, 0.1] };
    let src = SourceFn::new(|x: &[f64]| x.iter().map(|v| (3.0 * v).sin()).sum());
    vec![
        LossSpec::mse(),
        LossSpec::mse_plus_grad(),
        LossSpec::ritz(10.0, src.clone(), boundary.clone()),
        LossSpec::lse(10.0, src, boundary),
    ]
}

fn gradient_correctness() -> Verdict {
    const NETS: usize = 20;
    const H: f64 = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut skipped = 0;
    for (i, act) in ACTIVATIONS.iter().enumerate() {
        for rep in 0..NETS {
            let dim = 1 + rep % 3;
            let arch = Architecture::uniform(&[dim, 5, 4, 1], *act);
            let net: MlpNetwork = init_network(&arch, InitScheme::Gaussian { std: 0.8 }, (i * 100 + rep) as u64).map_err(|e| e.to_string())?;
            let n = 6;
            let inputs: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let targets: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let grads: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let data = Dataset::new(dim, inputs, targets).and_then(|d| d.with_target_grads(grads)).map_err(|e| e.to_string())?;

            for loss in losses(dim, &mut rng) {
                if loss.order() == DerivOrder::Laplacian && !act.twice_differentiable() {
                    skipped += 1;
                    continue;
                }
                let (_, g) = loss_and_gradient(&net, &loss, &data).map_err(|e| e.to_string())?;
                let mut probe = net.clone();
                let mut fd = Vec::with_capacity(g.len());
                for j in 0..net.num_params() {
                    let p0 = net.params()[j];
                    probe.params_mut()[j] = p0 + H;
                    let up = loss_value(&probe, &loss, &data).map_err(|e| e.to_string())?;
                    probe.params_mut()[j] = p0 - H;
                    let dn = loss_value(&probe, &loss, &data).map_err(|e| e.to_string())?;
                    probe.params_mut()[j] = p0;
                    fd.push((up - dn) / (2.0 * H));
                }
                worst = worst.max(rel_l2(&g, &fd));
                checked += 1;
            }

            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let order = if act.twice_differentiable() { DerivOrder::Laplacian } else { DerivOrder::Gradient };
            let (grad, lap) = input_derivatives(&net, &x, order).map_err(|e| e.to_string())?;
            let mut fd = vec![0.0; dim];
            let mut fd_lap = 0.0;
            for c in 0..dim {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[c] += H;
                xm[c] -= H;
                let f = |p: &[f64]| net.predict(p).map(|v| v[0]).map_err(|e| e.to_string());
                fd[c] = (f(&xp)? - f(&xm)?) / (2.0 * H);
                if lap.is_some() {
                    let gp = input_derivatives(&net, &xp, DerivOrder::Gradient).map_err(|e| e.to_string())?.0;
                    let gm = input_derivatives(&net, &xm, DerivOrder::Gradient).map_err(|e| e.to_string())?.0;
                    fd_lap += (gp[c] - gm[c]) / (2.0 * H);
                }
            }
            worst = worst.max(rel_l2(&grad, &fd));
            if let Some(l) = lap {
                worst = worst.max((l - fd_lap).abs() / fd_lap.abs().max(1e-3));
            }
            checked += 1;
        }
    }
    Ok((worst <= 1e-6, format!("{checked} comparisons, {skipped} second-order losses skipped for kinked activations, worst relative error {worst:.2e}")))
}

fn parseval() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0.0f64;
    for n in [8usize, 64, 256] {
        for _ in 0..20 {
            let h: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let (sh, sf) = (dft_uniform(&h), dft_uniform(&f));
            let spectral: f64 = sh.amps.iter().zip(&sf.amps).map(|(a, b)| (a - b).norm_sqr()).sum();
            worst = worst.max((mse(&h, &f) - spectral).abs());
        }
    }
    Ok((worst <= 1e-10, format!("n in {{8, 64, 256}}, 20 grids each, worst gap {worst:.2e}")))
}

fn jacobi_oracle() -> Verdict {
    const N: usize = 101;
    let sys = assemble_poisson_1d(N, |x| (3.0 * PI * x).sin()).map_err(|e| e.to_string())?;
    let exact = sys.solve_direct();
    // start with unit error coefficient on every mode
    let mut u0 = exact.clone();
    for k in 1..N {
        u0.iter_mut().zip(sine_mode(N, k)).for_each(|(u, w)| *u += w);
    }

    let short = jacobi_run(&sys, &u0, 60, 1).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for k in 1..N {
        let rate = jacobi_mode_rate(N, k).map_err(|e| e.to_string())?;
        let ratios = short.trace.contractions(k, 1e-4);
        if ratios.is_empty() {
            return Ok((false, format!("mode {k} has no measurable contraction")));
        }
        worst = ratios.iter().fold(worst, |m, r| m.max((r - rate).abs()));
    }

    let threshold = 1e-3;
    let long = jacobi_run(&sys, &u0, 20_000, 1).map_err(|e| e.to_string())?;
    let iters = |ks: &[usize]| -> Vec<Option<u64>> { ks.iter().map(|&k| long.trace.iterations_to_threshold(k, threshold)).collect() };
    let decreasing = |ts: &[Option<u64>]| ts.iter().all(Option::is_some) && ts.windows(2).all(|w| w[1] < w[0]);
    let low: Vec<usize> = (1..=10).collect();
    let scaled: Vec<usize> = (1..=10).map(|j| j * (N - 1) / 20).collect();
    let (t_low, t_scaled) = (iters(&low), iters(&scaled));
    let fmt = |ts: &[Option<u64>]| ts.iter().map(|t| t.map_or("-".into(), |v| v.to_string())).collect::<Vec<_>>().join(" ");
    let passed = worst <= 1e-10 && decreasing(&t_low) && decreasing(&t_scaled);
    Ok((
        passed,
        format!("worst contraction gap {worst:.2e}; iterations to 1e-3 at k=1..10: {}; at k={scaled:?}: {}", fmt(&t_low), fmt(&t_scaled)),
    ))
}

fn residual_flow_equivalence() -> Verdict {
    const STEPS: u64 = 100;
    let n = 32;
    let xs: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| (PI * x).sin() + (4.0 * PI * x).sin()).collect();
    let arch = Architecture::uniform(&[1, 256, 1], ActivationKind::Tanh);
    let net = init_network(&arch, InitScheme::Ntk, 5).map_err(|e| e.to_string())?;
    let gram = empirical_gram(&net, &xs).map_err(|e| e.to_string())?;
    // gradient descent on (1/n)Σu² moves the residual by (2η/n)K
    let eta = 0.5 * n as f64 / gram.eigen.values[0];
    let h0 = net.predict(&xs).map_err(|e| e.to_string())?;
    let u0: Vec<f64> = h0.iter().zip(&ys).map(|(h, y)| h - y).collect();
    let flow = residual_flow(&gram, &u0, 2.0 * eta / n as f64, STEPS as usize).map_err(|e| e.to_string())?;

    let mut lin = LinearizedModel::new(net);
    let data = Dataset::new(1, xs.clone(), ys.clone()).map_err(|e| e.to_string())?;
    let probes = ProbeSpec { snapshot_inputs: Some(xs.clone()), ..ProbeSpec::default() };
    let schedule = Schedule { snapshots: (0..=STEPS).collect(), ..Schedule::every(STEPS, STEPS) };
    let meta = RunMeta { config_hash: "acceptance".into(), seed: 5 };
    let rec = train(&mut lin, &data, &LossSpec::mse(), &OptimizerSpec::gd(eta), &schedule, &probes, &meta).map_err(|e| e.to_string())?;
    if rec.snapshots.len() != STEPS as usize + 1 {
        return Ok((false, format!("expected {} snapshots, got {}", STEPS + 1, rec.snapshots.len())));
    }
    let mut worst = 0.0f64;
    for (snap, u_flow) in rec.snapshots.iter().zip(&flow.residuals) {
        let u_lin: Vec<f64> = snap.outputs.iter().zip(&ys).map(|(h, y)| h - y).collect();
        worst = worst.max(rel_l2(&u_lin, u_flow));
    }
    let drop = rel_l2(&flow.residuals[STEPS as usize], &vec![0.0; n]) / rel_l2(&u0, &vec![0.0; n]);
    Ok((worst <= 1e-3, format!("{STEPS} steps, residual norm ratio {drop:.3}, worst relative L2 {worst:.2e}")))
}

fn natural_cubic_spline(xs: &[f64], ys: &[f64], at: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    // second derivatives m_1..m_{n-2} by the Thomas algorithm, m_0 = m_{n-1} = 0
    let mut m = vec![0.0; n];
    let inner = n - 2;
    let mut diag: Vec<f64> = (1..n - 1).map(|i| 2.0 * (h[i - 1] + h[i])).collect();
    let mut rhs: Vec<f64> = (1..n - 1).map(|i| 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1])).collect();
    for i in 1..inner {
        let w = h[i] / diag[i - 1];
        diag[i] -= w * h[i];
        rhs[i] -= w * rhs[i - 1];
    }
    for i in (0..inner).rev() {
        let upper = if i + 1 < inner { h[i + 1] * m[i + 2] } else { 0.0 };
        m[i + 1] = (rhs[i] - upper) / diag[i];
    }
    at.iter()
        .map(|&x| {
            let i = xs.windows(2).position(|w| x <= w[1]).unwrap_or(n - 2);
            let (a, b) = (xs[i + 1] - x, x - xs[i]);
            m[i] * a.powi(3) / (6.0 * h[i]) + m[i + 1] * b.powi(3) / (6.0 * h[i]) + (ys[i] / h[i] - m[i] * h[i] / 6.0) * a + (ys[i + 1] / h[i] - m[i + 1] * h[i] / 6.0) * b
        })
        .collect()
}

fn linear_interpolant(xs: &[f64], ys: &[f64], at: &[f64]) -> Vec<f64> {
    at.iter()
        .map(|&x| {
            let i = xs.windows(2).position(|w| x <= w[1]).unwrap_or(xs.len() - 2);
            let s = (x - xs[i]) / (xs[i + 1] - xs[i]);
            ys[i] + s * (ys[i + 1] - ys[i])
        })
        .collect()
}

fn lfp_spline_limits() -> Verdict {
    let span = 2.0;
    let grid = FreqGrid::Untruncated { spacing: 1.0 / (64.0 * span) };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut xs: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
    xs.sort_by(f64::total_cmp);
    let ys: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
    let eval: Vec<f64> = (0..=400).map(|i| xs[0] + (xs[7] - xs[0]) * i as f64 / 400.0).collect();
    let sup = |a: &[f64], b: &[f64]| {
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
    };
    let solve = |gamma: GammaSpec| -> Result<Vec<f64>, String> {
        let kernel = LfpKernel::new(gamma, grid).map_err(|e| e.to_string())?;
        lfp_equilibrium(&xs, &ys, &kernel, &|_| 0.0, &eval).map_err(|e| e.to_string())
    };
    let linear = solve(GammaSpec::new(0.0, 1.0, 1).map_err(|e| e.to_string())?)?;
    let cubic = solve(GammaSpec::new(1.0, 0.0, 1).map_err(|e| e.to_string())?)?;
    let e_lin = sup(&linear, &linear_interpolant(&xs, &ys, &eval));
    let e_cub = sup(&cubic, &natural_cubic_spline(&xs, &ys, &eval));
    Ok((e_lin <= 1e-2 && e_cub <= 1e-2, format!("1/xi^2 vs linear {e_lin:.2e}, 1/xi^4 vs natural cubic {e_cub:.2e}")))
}

fn experiment(name: &str) -> Verdict {
    let cfg = ExperimentConfig::resolve(name, None).map_err(|e| e.to_string())?;
    let out = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let detail = out
        .summary
        .checks
        .iter()
        .map(|c| format!("{} [{}] {}", if c.passed { "ok" } else { "failed" }, c.name, c.detail))
        .collect::<Vec<_>>()
        .join("; ");
    Ok((out.passed(), detail))
}

macro_rules! registered {
    ($label:literal, $name:literal) => {
        Criterion { name: $label, run: || experiment($name) }
    };
}

fn criteria() -> Vec<Criterion> {
    vec![
        Criterion { name: "gradient correctness", run: gradient_correctness },
        Criterion { name: "parseval identity", run: parseval },
        Criterion { name: "jacobi oracle", run: jacobi_oracle },
        Criterion { name: "residual-flow equivalence", run: residual_flow_equivalence },
        Criterion { name: "lfp spline limits", run: lfp_spline_limits },
        registered!("ntk eigen spectral bias (Sec. NTK regime)", "ntk-eigen"),
        registered!("runge coexistence (Fig. runge)", "runge"),
        registered!("f-principle ordering (Fig. onelayer)", "fp-1d"),
        registered!("opposite orderings (Fig. Poisson)", "poisson-dnn-vs-jacobi"),
        registered!("hybrid speedup (Fig. Poisson(d))", "hybrid"),
        registered!("ricker flip (Figs. ricker, 1dnonfp)", "ricker-flip"),
        registered!("gradient-loss acceleration (Fig. gradloss)", "grad-loss"),
        registered!("parity vs low-frequency generalization (Fig. parity)", "parity-gen"),
        registered!("early stopping (Fig. Generalization)", "early-stop"),
        registered!("mscale dnn (Sec. MscaleDNN)", "mscale-two-tone"),
        registered!("filtering method (Fig. Noisefitting-Mnist)", "fp-filtering"),
        registered!("anti-f-principle via large init (Sec. anti-F-Principle)", "anti-fp-large-init"),
        registered!("lfp vs training (Sec. LFP model)", "lfp-vs-training"),
    ]
}

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<Criterion> = criteria().into_iter().filter(|c| filters.is_empty() || filters.iter().any(|f| c.name.contains(f.as_str()))).collect();
    let mut failed = 0;
    for c in &selected {
        let start = Instant::now();
        let (ok, detail) = match (c.run)() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!("{} {} ({:.1}s): {detail}", if ok { "PASS" } else { "FAIL" }, c.name, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", selected.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
