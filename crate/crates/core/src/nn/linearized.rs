//! First-order Taylor expansion of a model in its parameters.

use super::model::{batch_len, tangent_features, DerivOrder, Model, ModelOutput, OutputAdjoint};
use crate::error::{Error, Result};

/// `f_lin(x; θ) = f(x; θ₀) + ∇_θ f(x; θ₀)·(θ − θ₀)`, trainable in `θ`.
#[derive(Debug, Clone)]
pub struct LinearizedModel<M: Model> {
    base: M,
    theta: Vec<f64>,
}

pub struct LinearizedTape {
    features: Vec<f64>,
    n: usize,
}

impl<M: Model> LinearizedModel<M> {
    /// Expansion around the current parameters of `base`.
    pub fn new(base: M) -> Self {
        let theta = base.params().to_vec();
        Self { base, theta }
    }

    pub fn base(&self) -> &M {
        &self.base
    }

    fn displacement(&self) -> Vec<f64> {
        self.theta.iter().zip(self.base.params()).map(|(t, t0)| t - t0).collect()
    }
}

impl<M: Model> Model for LinearizedModel<M> {
    type Tape = LinearizedTape;

    fn input_dim(&self) -> usize {
        self.base.input_dim()
    }

    fn params(&self) -> &[f64] {
        &self.theta
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    fn check_order(&self, order: DerivOrder) -> Result<()> {
        if order != DerivOrder::Value {
            return Err(Error::InvalidParameter("linearized model provides values only".into()));
        }
        Ok(())
    }

    fn forward_tape(&self, inputs: &[f64], order: DerivOrder) -> Result<(ModelOutput, LinearizedTape)> {
        self.check_order(order)?;
        let n = batch_len(inputs, self.input_dim())?;
        let p = self.theta.len();
        let base = self.base.predict(inputs)?;
        let features = tangent_features(&self.base, inputs)?;
        let delta = self.displacement();
        let value = base
            .iter()
            .zip(features.chunks(p))
            .map(|(f0, row)| f0 + row.iter().zip(&delta).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let out = ModelOutput { n, dim: self.input_dim(), value, grad: Vec::new(), laplacian: Vec::new() };
        Ok((out, LinearizedTape { features, n }))
    }

    fn backward(&self, tape: &LinearizedTape, adj: &OutputAdjoint, grad: &mut [f64]) {
        let p = self.theta.len();
        for i in 0..tape.n {
            let a = adj.value[i];
            for (g, f) in grad.iter_mut().zip(&tape.features[i * p..(i + 1) * p]) {
                *g += a * f;
            }
        }
    }
}

/// Evaluate the linearization of `net0` at parameters `theta` and input `x`.
pub fn linearized_forward<M: Model>(net0: &M, theta: &[f64], x: &[f64]) -> Result<f64> {
    if theta.len() != net0.num_params() {
        return Err(Error::DimensionMismatch { expected: net0.num_params(), got: theta.len() });
    }
    let mut lin = LinearizedModel::new(net0.clone());
    lin.params_mut().copy_from_slice(theta);
    Ok(lin.predict(x)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::activation::ActivationKind;
    use crate::nn::network::{init_network, Architecture, InitScheme};

    #[test]
    fn equals_base_at_expansion_point_and_is_affine() {
        let arch = Architecture::uniform(&[2, 6, 1], ActivationKind::Tanh);
        let net = init_network(&arch, InitScheme::Gaussian { std: 0.7 }, 4).unwrap();
        let x = [0.3, -0.8];
        let th0 = net.params().to_vec();
        let f0 = linearized_forward(&net, &th0, &x).unwrap();
        assert!((f0 - net.predict(&x).unwrap()[0]).abs() < 1e-15);
        let d: Vec<f64> = (0..th0.len()).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.01).collect();
        let at = |s: f64| {
            let th: Vec<f64> = th0.iter().zip(&d).map(|(a, b)| a + s * b).collect();
            linearized_forward(&net, &th, &x).unwrap()
        };
        assert!(((at(2.0) - f0) - 2.0 * (at(1.0) - f0)).abs() < 1e-13);
        assert!(linearized_forward(&net, &th0[1..], &x).is_err());
    }
}
