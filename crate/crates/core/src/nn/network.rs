//! Fully connected feed-forward networks with exact input derivatives.
//!
//! A forward pass propagates up to three *channels* per sample: the value, the
//! input gradient (one channel per input coordinate) and the Laplacian. All
//! channels share the affine maps, so a layer is a single matrix product over
//! the stacked channel blocks; only the pointwise nonlinearity mixes them.
//! Reverse mode runs through the same augmented graph, which gives exact
//! parameter gradients for losses on `u`, `∇u` and `Δu`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::activation::ActivationKind;
use super::model::{batch_len, gemm, DerivOrder, Model, ModelOutput, OutputAdjoint};
use crate::error::{Error, Result};

/// Layer widths (input first, output last) plus one activation per hidden layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub widths: Vec<usize>,
    pub activations: Vec<ActivationKind>,
}

impl Architecture {
    /// Same activation in every hidden layer.
    pub fn uniform(widths: &[usize], activation: ActivationKind) -> Self {
        let hidden = widths.len().saturating_sub(2);
        Self { widths: widths.to_vec(), activations: vec![activation; hidden] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 {
            return Err(Error::InvalidArchitecture("need at least input and output widths".into()));
        }
        if self.widths.contains(&0) {
            return Err(Error::InvalidArchitecture(format!("zero width in {:?}", self.widths)));
        }
        if *self.widths.last().unwrap() != 1 {
            return Err(Error::InvalidArchitecture("only scalar-output networks are supported".into()));
        }
        if self.activations.len() != self.widths.len() - 2 {
            return Err(Error::InvalidArchitecture(format!(
                "{} hidden layers but {} activations",
                self.widths.len() - 2,
                self.activations.len()
            )));
        }
        for act in &self.activations {
            act.validate()?;
        }
        Ok(())
    }

    /// `Σ_l (width_l · width_{l+1} + width_{l+1})`.
    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// Parameter initialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitScheme {
    /// Every parameter i.i.d. `normal(0, std²)`; output scaling 1. `std = 0` gives the zero network.
    Gaussian { std: f64 },
    /// Standard normal parameters with output scaling `1/√m`.
    Ntk,
    /// NTK scaling with separate standard deviations for hidden weights, hidden
    /// biases and the output layer weights; the output bias starts at zero.
    NtkLayered { weight_std: f64, bias_std: f64, output_std: f64 },
}

/// Feed-forward network `x ↦ s·(W_L σ(… σ(W_1 x + b_1) …) + b_L)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNetwork {
    arch: Architecture,
    params: Vec<f64>,
    output_scaling: f64,
    /// Per-neuron multipliers on the first-layer input product (multi-scale groups).
    first_layer_scales: Option<Vec<f64>>,
    seed: u64,
}

/// Draw a network from `scheme` with a deterministic generator seeded by `seed`.
pub fn init_network(arch: &Architecture, scheme: InitScheme, seed: u64) -> Result<MlpNetwork> {
    arch.validate()?;
    let check = |name: &str, s: f64| {
        if s < 0.0 || !s.is_finite() {
            Err(Error::InvalidParameter(format!("{name} must be a nonnegative finite std, got {s}")))
        } else {
            Ok(())
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Vec::with_capacity(arch.param_count());
    let last = arch.widths.len() - 2;
    let m = arch.widths[arch.widths.len() - 2] as f64;
    let mut draw = |std: f64, count: usize, out: &mut Vec<f64>| {
        if std == 0.0 {
            out.extend(std::iter::repeat_n(0.0, count));
        } else {
            let normal = Normal::new(0.0, std).expect("validated std");
            out.extend((0..count).map(|_| normal.sample(&mut rng)));
        }
    };
    let output_scaling = match scheme {
        InitScheme::Gaussian { std } => {
            check("std", std)?;
            draw(std, arch.param_count(), &mut params);
            1.0
        }
        InitScheme::Ntk => {
            draw(1.0, arch.param_count(), &mut params);
            1.0 / m.sqrt()
        }
        InitScheme::NtkLayered { weight_std, bias_std, output_std } => {
            check("weight_std", weight_std)?;
            check("bias_std", bias_std)?;
            check("output_std", output_std)?;
            for (l, w) in arch.widths.windows(2).enumerate() {
                if l == last {
                    draw(output_std, w[0] * w[1], &mut params);
                    draw(0.0, w[1], &mut params);
                } else {
                    draw(weight_std, w[0] * w[1], &mut params);
                    draw(bias_std, w[1], &mut params);
                }
            }
            1.0 / m.sqrt()
        }
    };
    Ok(MlpNetwork { arch: arch.clone(), params, output_scaling, first_layer_scales: None, seed })
}

struct HiddenTape {
    /// Pre-activations for every channel, `C·n × width`.
    pre: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    d3: Vec<f64>,
}

/// Intermediate state of a forward pass, consumed by [`Model::backward`].
pub struct MlpTape {
    n: usize,
    order: DerivOrder,
    /// Input to each affine layer, `C·n × width_l`.
    inputs: Vec<Vec<f64>>,
    hidden: Vec<HiddenTape>,
}

impl MlpNetwork {
    /// Build from explicit parameters (layout: per layer `W` row-major `out × in`, then `b`).
    pub fn from_params(arch: Architecture, params: Vec<f64>, output_scaling: f64) -> Result<Self> {
        arch.validate()?;
        if params.len() != arch.param_count() {
            return Err(Error::DimensionMismatch { expected: arch.param_count(), got: params.len() });
        }
        Ok(Self { arch, params, output_scaling, first_layer_scales: None, seed: 0 })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn widths(&self) -> &[usize] {
        &self.arch.widths
    }

    pub fn output_scaling(&self) -> f64 {
        self.output_scaling
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn first_layer_scales(&self) -> Option<&[f64]> {
        self.first_layer_scales.as_deref()
    }

    /// Multiply the input seen by each first-layer neuron by a fixed constant.
    pub fn with_first_layer_scales(mut self, scales: Vec<f64>) -> Result<Self> {
        if scales.len() != self.arch.widths[1] {
            return Err(Error::DimensionMismatch { expected: self.arch.widths[1], got: scales.len() });
        }
        self.first_layer_scales = Some(scales);
        Ok(self)
    }

    fn num_layers(&self) -> usize {
        self.arch.widths.len() - 1
    }

    /// Offsets of `(W_l, b_l)` in the flat parameter vector.
    fn layer_offsets(&self, l: usize) -> (usize, usize) {
        let mut off = 0;
        for w in self.arch.widths.windows(2).take(l) {
            off += w[0] * w[1] + w[1];
        }
        let (i, o) = (self.arch.widths[l], self.arch.widths[l + 1]);
        (off, off + i * o)
    }

    fn channels(&self, order: DerivOrder) -> usize {
        let d = self.arch.widths[0];
        match order {
            DerivOrder::Value => 1,
            DerivOrder::Gradient => 1 + d,
            DerivOrder::Laplacian => 2 + d,
        }
    }
}

impl Model for MlpNetwork {
    type Tape = MlpTape;

    fn input_dim(&self) -> usize {
        self.arch.widths[0]
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn check_order(&self, order: DerivOrder) -> Result<()> {
        if order == DerivOrder::Laplacian {
            if let Some(act) = self.arch.activations.iter().find(|a| !a.twice_differentiable()) {
                return Err(Error::SecondDerivativeUndefined(act.name()));
            }
        }
        Ok(())
    }

    fn forward_tape(&self, inputs: &[f64], order: DerivOrder) -> Result<(ModelOutput, MlpTape)> {
        self.check_order(order)?;
        let d = self.input_dim();
        let n = batch_len(inputs, d)?;
        let nch = self.channels(order);
        let n_grad = if order >= DerivOrder::Gradient { d } else { 0 };
        let lap = order == DerivOrder::Laplacian;
        let lap_ch = 1 + d;

        let mut a = vec![0.0; nch * n * d];
        a[..n * d].copy_from_slice(inputs);
        for c in 0..n_grad {
            let block = &mut a[(1 + c) * n * d..(2 + c) * n * d];
            for r in 0..n {
                block[r * d + c] = 1.0;
            }
        }

        let layers = self.num_layers();
        let mut tape = MlpTape { n, order, inputs: Vec::with_capacity(layers), hidden: Vec::with_capacity(layers - 1) };
        for l in 0..layers {
            let (in_w, out_w) = (self.arch.widths[l], self.arch.widths[l + 1]);
            let (w_off, b_off) = self.layer_offsets(l);
            let w = &self.params[w_off..b_off];
            let b = &self.params[b_off..b_off + out_w];
            let rows = nch * n;
            let mut s = vec![0.0; rows * out_w];
            gemm(rows, in_w, out_w, 1.0, &a, (in_w, 1), w, (1, in_w), 0.0, &mut s, (out_w, 1));
            if l == 0 {
                if let Some(scales) = &self.first_layer_scales {
                    for row in s.chunks_mut(out_w) {
                        row.iter_mut().zip(scales).for_each(|(v, k)| *v *= k);
                    }
                }
            }
            for row in s[..n * out_w].chunks_mut(out_w) {
                row.iter_mut().zip(b).for_each(|(v, bj)| *v += bj);
            }
            tape.inputs.push(a);

            if l + 1 == layers {
                let k = self.output_scaling;
                let value = s[..n].iter().map(|v| v * k).collect();
                let mut grad = vec![0.0; n * n_grad];
                for c in 0..n_grad {
                    for r in 0..n {
                        grad[r * d + c] = s[(1 + c) * n + r] * k;
                    }
                }
                let laplacian = if lap { s[lap_ch * n..(lap_ch + 1) * n].iter().map(|v| v * k).collect() } else { Vec::new() };
                return Ok((ModelOutput { n, dim: d, value, grad, laplacian }, tape));
            }

            let act = self.arch.activations[l];
            let m = n * out_w;
            let mut next = vec![0.0; nch * m];
            let mut d1 = vec![0.0; m];
            let mut d2 = if n_grad > 0 { vec![0.0; m] } else { Vec::new() };
            let mut d3 = if lap { vec![0.0; m] } else { Vec::new() };
            for idx in 0..m {
                let j = act.jet(s[idx]);
                next[idx] = j.v;
                d1[idx] = j.d1;
                if n_grad == 0 {
                    continue;
                }
                d2[idx] = j.d2;
                let mut sumsq = 0.0;
                for c in 1..=n_grad {
                    let sc = s[c * m + idx];
                    next[c * m + idx] = j.d1 * sc;
                    sumsq += sc * sc;
                }
                if lap {
                    d3[idx] = j.d3;
                    next[lap_ch * m + idx] = j.d2 * sumsq + j.d1 * s[lap_ch * m + idx];
                }
            }
            tape.hidden.push(HiddenTape { pre: s, d1, d2, d3 });
            a = next;
        }
        unreachable!("network has at least one layer")
    }

    fn backward(&self, tape: &MlpTape, adjoint: &OutputAdjoint, grad: &mut [f64]) {
        let d = self.input_dim();
        let n = tape.n;
        let nch = self.channels(tape.order);
        let n_grad = if tape.order >= DerivOrder::Gradient { d } else { 0 };
        let lap = tape.order == DerivOrder::Laplacian;
        let lap_ch = 1 + d;
        let k = self.output_scaling;

        let mut sbar = vec![0.0; nch * n];
        for (s, a) in sbar[..n].iter_mut().zip(&adjoint.value) {
            *s = a * k;
        }
        if let Some(g) = adjoint.grad.as_ref().filter(|_| n_grad > 0) {
            for c in 0..n_grad {
                for r in 0..n {
                    sbar[(1 + c) * n + r] = g[r * d + c] * k;
                }
            }
        }
        if let Some(l) = adjoint.laplacian.as_ref().filter(|_| lap) {
            for r in 0..n {
                sbar[lap_ch * n + r] = l[r] * k;
            }
        }

        for l in (0..self.num_layers()).rev() {
            let (in_w, out_w) = (self.arch.widths[l], self.arch.widths[l + 1]);
            let (w_off, b_off) = self.layer_offsets(l);
            let rows = nch * n;
            {
                let (gw, gb) = grad[w_off..b_off + out_w].split_at_mut(b_off - w_off);
                for row in sbar[..n * out_w].chunks(out_w) {
                    gb.iter_mut().zip(row).for_each(|(g, s)| *g += s);
                }
                let scaled;
                let sbar_w: &[f64] = match (&self.first_layer_scales, l) {
                    (Some(scales), 0) => {
                        scaled = sbar
                            .chunks(out_w)
                            .flat_map(|row| row.iter().zip(scales).map(|(s, k)| s * k))
                            .collect::<Vec<_>>();
                        &scaled
                    }
                    _ => &sbar,
                };
                gemm(out_w, rows, in_w, 1.0, sbar_w, (1, out_w), &tape.inputs[l], (in_w, 1), 1.0, gw, (in_w, 1));
            }
            if l == 0 {
                break;
            }

            let w = &self.params[w_off..b_off];
            let mut abar = vec![0.0; rows * in_w];
            gemm(rows, out_w, in_w, 1.0, &sbar, (out_w, 1), w, (in_w, 1), 0.0, &mut abar, (in_w, 1));

            let ht = &tape.hidden[l - 1];
            let m = n * in_w;
            let mut next = vec![0.0; nch * m];
            for idx in 0..m {
                let d1 = ht.d1[idx];
                let mut s0 = d1 * abar[idx];
                if n_grad > 0 {
                    let d2 = ht.d2[idx];
                    for c in 1..=n_grad {
                        s0 += d2 * abar[c * m + idx] * ht.pre[c * m + idx];
                        next[c * m + idx] = d1 * abar[c * m + idx];
                    }
                    if lap {
                        let al = abar[lap_ch * m + idx];
                        let mut sumsq = 0.0;
                        for c in 1..=n_grad {
                            let pc = ht.pre[c * m + idx];
                            sumsq += pc * pc;
                            next[c * m + idx] += 2.0 * d2 * pc * al;
                        }
                        s0 += al * (ht.d3[idx] * sumsq + d2 * ht.pre[lap_ch * m + idx]);
                        next[lap_ch * m + idx] = d1 * al;
                    }
                }
                next[idx] = s0;
            }
            sbar = next;
        }
    }
}

/// Scalar output at a single input.
pub fn forward<M: Model>(model: &M, x: &[f64]) -> Result<f64> {
    if x.len() != model.input_dim() {
        return Err(Error::DimensionMismatch { expected: model.input_dim(), got: x.len() });
    }
    Ok(model.predict(x)?[0])
}

/// Exact input gradient and, for `order = Laplacian`, the Laplacian at `x`.
pub fn input_derivatives<M: Model>(model: &M, x: &[f64], order: DerivOrder) -> Result<(Vec<f64>, Option<f64>)> {
    if order == DerivOrder::Value {
        return Err(Error::InvalidParameter("derivative order must be 1 or 2".into()));
    }
    if x.len() != model.input_dim() {
        return Err(Error::DimensionMismatch { expected: model.input_dim(), got: x.len() });
    }
    let out = model.eval(x, order)?;
    Ok((out.grad, out.laplacian.first().copied()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_unit(act: ActivationKind, a: f64, w: f64, b: f64) -> MlpNetwork {
        MlpNetwork::from_params(Architecture::uniform(&[1, 1, 1], act), vec![w, b, a, 0.0], 1.0).unwrap()
    }

    #[test]
    fn zero_init_outputs_zero() {
        let arch = Architecture::uniform(&[1, 4, 1], ActivationKind::Tanh);
        let net = init_network(&arch, InitScheme::Gaussian { std: 0.0 }, 3).unwrap();
        assert!(net.params().iter().all(|&p| p == 0.0));
        for x in [-2.0, 0.0, 1.5] {
            assert_eq!(forward(&net, &[x]).unwrap(), 0.0);
        }
    }

    #[test]
    fn parameter_count_matches_vector_length() {
        let arch = Architecture::uniform(&[10, 500, 100, 1], ActivationKind::Tanh);
        let net = init_network(&arch, InitScheme::Gaussian { std: 0.05 }, 0).unwrap();
        assert_eq!(arch.param_count(), 10 * 500 + 500 + 500 * 100 + 100 + 100 + 1);
        assert_eq!(net.num_params(), 55_701);
    }

    #[test]
    fn accepts_large_poisson_architecture() {
        let arch = Architecture::uniform(&[1, 4000, 500, 400, 1], ActivationKind::Tanh);
        assert!(arch.validate().is_ok());
        assert_eq!(arch.param_count(), 8000 + 4000 * 500 + 500 + 500 * 400 + 400 + 401);
    }

    #[test]
    fn rejects_bad_architectures_and_std() {
        assert!(Architecture::uniform(&[1], ActivationKind::Tanh).validate().is_err());
        assert!(Architecture::uniform(&[], ActivationKind::Tanh).validate().is_err());
        assert!(Architecture::uniform(&[1, 0, 1], ActivationKind::Tanh).validate().is_err());
        let arch = Architecture::uniform(&[1, 3, 1], ActivationKind::Tanh);
        assert!(init_network(&arch, InitScheme::Gaussian { std: -1.0 }, 0).is_err());
    }

    #[test]
    fn tiny_forward_examples() {
        assert_eq!(forward(&single_unit(ActivationKind::Tanh, 1.0, 1.0, 0.0), &[0.0]).unwrap(), 0.0);
        assert_eq!(forward(&single_unit(ActivationKind::Relu, 2.0, 1.0, -1.0), &[3.0]).unwrap(), 4.0);
    }

    #[test]
    fn ntk_scaling_arithmetic() {
        // w = 0 and b chosen so relu(b) = 1 for all four units.
        let mut params = vec![0.0; 4];
        params.extend([1.0; 4]);
        params.extend([1.0; 4]);
        params.push(0.0);
        let net = MlpNetwork::from_params(Architecture::uniform(&[1, 4, 1], ActivationKind::Relu), params, 0.5).unwrap();
        assert_eq!(forward(&net, &[0.3]).unwrap(), 2.0);
    }

    #[test]
    fn single_tanh_unit_derivatives() {
        let net = single_unit(ActivationKind::Tanh, 1.0, 1.0, 0.0);
        let (g, l) = input_derivatives(&net, &[0.0], DerivOrder::Laplacian).unwrap();
        assert_eq!(g, vec![1.0]);
        assert_eq!(l, Some(0.0));
    }

    #[test]
    fn relu_rejects_laplacian() {
        let net = single_unit(ActivationKind::Relu, 1.0, 1.0, 0.0);
        assert!(matches!(
            input_derivatives(&net, &[0.5], DerivOrder::Laplacian),
            Err(Error::SecondDerivativeUndefined("relu"))
        ));
        assert!(input_derivatives(&net, &[0.5], DerivOrder::Gradient).is_ok());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let net = single_unit(ActivationKind::Tanh, 1.0, 1.0, 0.0);
        assert!(matches!(forward(&net, &[0.0, 1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn relu_gradient_piecewise_constant() {
        let arch = Architecture::uniform(&[2, 16, 8, 1], ActivationKind::Relu);
        let net = init_network(&arch, InitScheme::Gaussian { std: 0.7 }, 11).unwrap();
        let x = [0.31, -0.22];
        let (g0, _) = input_derivatives(&net, &x, DerivOrder::Gradient).unwrap();
        let (g1, _) = input_derivatives(&net, &[x[0] + 1e-9, x[1] - 1e-9], DerivOrder::Gradient).unwrap();
        assert_eq!(g0, g1);
    }

    #[test]
    fn seed_determines_parameters() {
        let arch = Architecture::uniform(&[1, 8, 1], ActivationKind::Tanh);
        let a = init_network(&arch, InitScheme::Ntk, 5).unwrap();
        let b = init_network(&arch, InitScheme::Ntk, 5).unwrap();
        let c = init_network(&arch, InitScheme::Ntk, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.params(), c.params());
        assert!((a.output_scaling() - 1.0 / 8f64.sqrt()).abs() < 1e-15);
    }
}
