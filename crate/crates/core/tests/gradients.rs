//! Finite-difference checks of parameter gradients and input derivatives.

use fplab_core::nn::{
    init_network, input_derivatives, loss_and_gradient, loss_value, Architecture, BoundarySet, Dataset, DerivOrder,
    InitScheme, LossSpec, Model, SourceFn,
};
use fplab_core::nn::{ActivationKind, MlpNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ACTIVATIONS: [ActivationKind; 5] = [
    ActivationKind::Tanh,
    ActivationKind::Relu,
    ActivationKind::Ricker { a: 0.7 },
    ActivationKind::Sine,
    ActivationKind::Compact,
];

fn random_net(act: ActivationKind, dim: usize, seed: u64) -> MlpNetwork {
    let arch = Architecture::uniform(&[dim, 5, 4, 1], act);
    init_network(&arch, InitScheme::Gaussian { std: 0.8 }, seed).unwrap()
}

fn random_data(dim: usize, n: usize, rng: &mut ChaCha8Rng) -> Dataset {
    let inputs: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let targets: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let grads: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    Dataset::new(dim, inputs, targets).unwrap().with_target_grads(grads).unwrap()
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

fn fd_gradient(net: &MlpNetwork, loss: &LossSpec, data: &Dataset) -> Vec<f64> {
    let h = 1e-5;
    let mut probe = net.clone();
    (0..net.num_params())
        .map(|j| {
            let p0 = net.params()[j];
            probe.params_mut()[j] = p0 + h;
            let up = loss_value(&probe, loss, data).unwrap();
            probe.params_mut()[j] = p0 - h;
            let dn = loss_value(&probe, loss, data).unwrap();
            probe.params_mut()[j] = p0;
            (up - dn) / (2.0 * h)
        })
        .collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

#[test]
fn param_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    for (i, act) in ACTIVATIONS.iter().enumerate() {
        for rep in 0..4 {
            let dim = 1 + rep % 3;
            let net = random_net(*act, dim, 100 + (i * 10 + rep) as u64);
            let data = random_data(dim, 6, &mut rng);
            for loss in losses(dim, &mut rng) {
                if loss.order() == DerivOrder::Laplacian && !act.twice_differentiable() {
                    assert!(loss_value(&net, &loss, &data).is_err());
                    continue;
                }
                let (_, g) = loss_and_gradient(&net, &loss, &data).unwrap();
                let fd = fd_gradient(&net, &loss, &data);
                let e = rel_err(&g, &fd);
                assert!(e <= 1e-6, "{} / {}: relative error {e:e}", act.name(), loss.name());
                checked += 1;
            }
        }
    }
    assert!(checked >= 60);
}

#[test]
fn input_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-5;
    for (i, act) in ACTIVATIONS.iter().enumerate() {
        for rep in 0..4 {
            let dim = 1 + rep % 3;
            let net = random_net(*act, dim, 300 + (i * 10 + rep) as u64);
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let order = if act.twice_differentiable() { DerivOrder::Laplacian } else { DerivOrder::Gradient };
            let (grad, lap) = input_derivatives(&net, &x, order).unwrap();
            let mut fd = vec![0.0; dim];
            let mut fd_lap = 0.0;
            for c in 0..dim {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[c] += h;
                xm[c] -= h;
                fd[c] = (net.predict(&xp).unwrap()[0] - net.predict(&xm).unwrap()[0]) / (2.0 * h);
                if lap.is_some() {
                    let gp = input_derivatives(&net, &xp, DerivOrder::Gradient).unwrap().0;
                    let gm = input_derivatives(&net, &xm, DerivOrder::Gradient).unwrap().0;
                    fd_lap += (gp[c] - gm[c]) / (2.0 * h);
                }
            }
            assert!(rel_err(&grad, &fd) <= 1e-6, "{} gradient", act.name());
            if let Some(l) = lap {
                assert!((l - fd_lap).abs() <= 1e-6 * fd_lap.abs().max(1e-3), "{} laplacian {l} vs {fd_lap}", act.name());
            }
        }
    }
}

#[test]
fn gradient_loss_is_additive() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let net = random_net(ActivationKind::Tanh, 2, 1);
    let data = random_data(2, 8, &mut rng);
    let (_, g_mse) = loss_and_gradient(&net, &LossSpec::mse(), &data).unwrap();
    let (_, g_both) = loss_and_gradient(&net, &LossSpec::mse_plus_grad(), &data).unwrap();
    // the gradient-only term, via targets equal to the current outputs
    let pred = net.predict(&data.inputs).unwrap();
    let mut zeroed = data.clone();
    zeroed.targets = pred;
    let (_, g_term) = loss_and_gradient(&net, &LossSpec::mse_plus_grad(), &zeroed).unwrap();
    for ((a, b), c) in g_both.iter().zip(&g_mse).zip(&g_term) {
        assert!((a - (b + c)).abs() <= 1e-12 * (1.0 + a.abs()));
    }
}

#[test]
fn interpolating_net_has_zero_mse_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let net = random_net(ActivationKind::Tanh, 1, 4);
    let mut data = random_data(1, 5, &mut rng);
    data.targets = net.predict(&data.inputs).unwrap();
    let (v, g) = loss_and_gradient(&net, &LossSpec::mse(), &data).unwrap();
    assert_eq!(v, 0.0);
    assert!(g.iter().all(|x| *x == 0.0));
}
