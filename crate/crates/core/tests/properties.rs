//! Property tests for the transforms, the kernel flow, Jacobi and the multi-scale models.

use approx::{assert_abs_diff_eq, assert_relative_eq};
use fplab_core::freq::{dft_uniform, nudft, relative_spectral_error};
use fplab_core::mscale::{build_mscale, MscaleSpec, MscaleVariant};
use fplab_core::nn::{init_network, mse, ActivationKind, Architecture, InitScheme, Model};
use fplab_core::ntk::{eigen, residual_flow, GramKernel};
use fplab_core::pde::{assemble_poisson_1d, jacobi_mode_rate, jacobi_run};
use proptest::prelude::*;

fn values(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, n)
}

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..48).prop_flat_map(|n| (prop::collection::vec(-3.0..3.0f64, n), prop::collection::vec(-3.0..3.0f64, n)))
}

/// Symmetric positive semi-definite `AᵀA + εI` from a random square `A`.
fn psd(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, n * n).prop_map(move |a| {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = (0..n).map(|k| a[k * n + i] * a[k * n + j]).sum::<f64>() + if i == j { 1e-3 } else { 0.0 };
            }
        }
        m
    })
}

proptest! {
    #[test]
    fn parseval_on_uniform_grids((h, f) in pair()) {
        let (sh, sf) = (dft_uniform(&h), dft_uniform(&f));
        let spectral: f64 = sh.amps.iter().zip(&sf.amps).map(|(a, b)| (a - b).norm_sqr()).sum();
        assert_abs_diff_eq!(mse(&h, &f), spectral, epsilon = 1e-10);
    }

    #[test]
    fn nudft_is_linear((u, v) in pair(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let xs: Vec<f64> = (0..u.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let keys = [0.0, 0.5, 1.3, 4.0];
        let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let (su, sv, sw) = (nudft(&xs, &u, &keys).unwrap(), nudft(&xs, &v, &keys).unwrap(), nudft(&xs, &w, &keys).unwrap());
        for i in 0..keys.len() {
            let lin = su.amps[i] * a + sv.amps[i] * b;
            assert_abs_diff_eq!(sw.amps[i].re, lin.re, epsilon = 1e-12);
            assert_abs_diff_eq!(sw.amps[i].im, lin.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn nudft_on_uniform_nodes_is_the_dft(y in values(1..40)) {
        let n = y.len();
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let keys: Vec<f64> = (0..n).map(|k| k as f64).collect();
        let a = nudft(&xs, &y, &keys).unwrap();
        let b = dft_uniform(&y);
        for (p, q) in a.amps.iter().zip(&b.amps) {
            assert_abs_diff_eq!(p.re, q.re, epsilon = 1e-11);
            assert_abs_diff_eq!(p.im, q.im, epsilon = 1e-11);
        }
    }

    #[test]
    fn relative_error_is_scale_invariant(y in values(8..32), noise in values(32..33), c in 0.1..10.0f64) {
        let target: Vec<f64> = y.iter().map(|v| v + 4.0).collect();
        let model: Vec<f64> = target.iter().zip(&noise).map(|(t, e)| t + 0.3 * e).collect();
        let keys = [0.0];
        let base = relative_spectral_error(&dft_uniform(&target), &dft_uniform(&model), &keys).unwrap();
        let st = dft_uniform(&target).scaled(c);
        let sm = dft_uniform(&model).scaled(c);
        let scaled = relative_spectral_error(&st, &sm, &keys).unwrap();
        assert_relative_eq!(base.values[0], scaled.values[0], max_relative = 1e-12);
    }

    #[test]
    fn eigen_reconstructs_symmetric_matrices(m in psd(6)) {
        let n = 6;
        let e = eigen(&m, n).unwrap();
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        for (lambda, v) in e.values.iter().zip(&e.vectors) {
            assert_abs_diff_eq!(v.iter().map(|x| x * x).sum::<f64>(), 1.0, epsilon = 1e-12);
            for i in 0..n {
                let mv: f64 = (0..n).map(|j| m[i * n + j] * v[j]).sum();
                assert_abs_diff_eq!(mv, lambda * v[i], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn kernel_flow_decouples_modes(m in psd(5), u0 in values(5..6), steps in 1usize..30) {
        let gram = GramKernel::from_matrix((0..5).map(|i| i as f64).collect(), 1, m).unwrap();
        let eta = 1.0 / gram.eigen.values[0];
        let flow = residual_flow(&gram, &u0, eta, steps).unwrap();
        for (k, lambda) in gram.eigen.values.iter().enumerate() {
            let expected = (1.0 - eta * lambda).powi(steps as i32) * flow.mode_coeffs[0][k];
            assert_abs_diff_eq!(flow.mode_coeffs[steps][k], expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn jacobi_modes_contract_independently(e0 in values(15..16), t in 1u64..40) {
        let n = 16;
        let sys = assemble_poisson_1d(n, |x| x.cos()).unwrap();
        let exact = sys.solve_direct();
        let u0: Vec<f64> = exact.iter().zip(&e0).map(|(a, b)| a + b).collect();
        let run = jacobi_run(&sys, &u0, t, t).unwrap();
        let (first, last) = (&run.trace.coeffs[0], run.trace.coeffs.last().unwrap());
        for k in 1..n {
            let rate = jacobi_mode_rate(n, k).unwrap();
            assert_abs_diff_eq!(last[k - 1], rate.powi(t as i32) * first[k - 1], epsilon = 1e-10);
        }
    }

    #[test]
    fn unit_scale_groups_match_the_plain_network(seed in 0u64..1000, xs in values(1..12)) {
        let widths = vec![1, 12, 8, 1];
        let spec = MscaleSpec {
            scales: vec![1.0; 4],
            widths: widths.clone(),
            activation: ActivationKind::Tanh,
            variant: MscaleVariant::ScaledGroups,
            init: InitScheme::Gaussian { std: 0.5 },
        };
        let ms = build_mscale(&spec, seed).unwrap();
        let plain = init_network(&Architecture::uniform(&widths, ActivationKind::Tanh), spec.init, seed).unwrap();
        prop_assert_eq!(ms.num_params(), plain.num_params());
        for (a, b) in ms.predict(&xs).unwrap().iter().zip(plain.predict(&xs).unwrap()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn single_subnet_sees_scaled_input(seed in 0u64..1000, a in 0.5..16.0f64, xs in values(1..12)) {
        let widths = vec![1, 10, 1];
        let spec = MscaleSpec {
            scales: vec![a],
            widths: widths.clone(),
            activation: ActivationKind::Compact,
            variant: MscaleVariant::SumOfSubnets,
            init: InitScheme::Gaussian { std: 0.7 },
        };
        let ms = build_mscale(&spec, seed).unwrap();
        let plain = init_network(&Architecture::uniform(&widths, ActivationKind::Compact), spec.init, seed).unwrap();
        let scaled: Vec<f64> = xs.iter().map(|x| a * x).collect();
        for (p, q) in ms.predict(&xs).unwrap().iter().zip(plain.predict(&scaled).unwrap()) {
            assert_abs_diff_eq!(*p, q, epsilon = 1e-12);
        }
    }

    #[test]
    fn subnet_sum_adds_parameters(m in 1usize..6) {
        let widths = vec![1, 6, 1];
        let spec = MscaleSpec {
            scales: MscaleSpec::power_of_two_scales(m),
            widths: widths.clone(),
            activation: ActivationKind::Relu,
            variant: MscaleVariant::SumOfSubnets,
            init: InitScheme::Gaussian { std: 0.3 },
        };
        let single = init_network(&Architecture::uniform(&widths, ActivationKind::Relu), spec.init, 0).unwrap();
        prop_assert_eq!(build_mscale(&spec, 0).unwrap().num_params(), m * single.num_params());
    }
}
