use std::fmt;
use std::sync::Arc;

use super::model::{DerivOrder, Model, OutputAdjoint};
use crate::error::{Error, Result};

/// Samples `(x_i, y_i)` with optional target input-gradients for gradient-augmented losses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    /// Row-major `n × dim`.
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
    /// Row-major `n × dim`, required by [`LossKind::MsePlusGrad`].
    pub target_grads: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(dim: usize, inputs: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        if dim == 0 || inputs.len() != dim * targets.len() {
            return Err(Error::DimensionMismatch { expected: dim * targets.len(), got: inputs.len() });
        }
        Ok(Self { dim, inputs, targets, target_grads: None })
    }

    /// One-dimensional dataset.
    pub fn from_1d(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        Self::new(1, xs, ys)
    }

    pub fn with_target_grads(mut self, grads: Vec<f64>) -> Result<Self> {
        if grads.len() != self.inputs.len() {
            return Err(Error::DimensionMismatch { expected: self.inputs.len(), got: grads.len() });
        }
        self.target_grads = Some(grads);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    /// Rows selected by `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let mut inputs = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            inputs.extend_from_slice(self.point(i));
        }
        let target_grads = self.target_grads.as_ref().map(|g| {
            let mut out = Vec::with_capacity(idx.len() * self.dim);
            for &i in idx {
                out.extend_from_slice(&g[i * self.dim..(i + 1) * self.dim]);
            }
            out
        });
        Dataset { dim: self.dim, inputs, targets: idx.iter().map(|&i| self.targets[i]).collect(), target_grads }
    }
}

/// Source term `g(x)` of a Poisson problem.
#[derive(Clone)]
pub struct SourceFn(pub Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>);

impl SourceFn {
    pub fn new(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

impl fmt::Debug for SourceFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SourceFn(..)")
    }
}

/// Dirichlet boundary samples `(x, g̃(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySet {
    pub dim: usize,
    pub inputs: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum LossKind {
    /// `(1/n) Σ (u − y)²`.
    Mse,
    /// Mean squared error plus `(1/n) Σ |∇u − ∇y|²`.
    MsePlusGrad,
    /// `(1/n) Σ (|∇u|²/2 − g u) + (β/ñ) Σ_∂ (u − g̃)²`.
    Ritz { beta: f64, source: SourceFn },
    /// `(1/n) Σ (Δu + g)² + (β/ñ) Σ_∂ (u − g̃)²`.
    Lse { beta: f64, source: SourceFn },
}

#[derive(Debug, Clone)]
pub struct LossSpec {
    pub kind: LossKind,
    pub boundary: Option<BoundarySet>,
}

impl LossSpec {
    pub fn mse() -> Self {
        Self { kind: LossKind::Mse, boundary: None }
    }

    pub fn mse_plus_grad() -> Self {
        Self { kind: LossKind::MsePlusGrad, boundary: None }
    }

    pub fn ritz(beta: f64, source: SourceFn, boundary: BoundarySet) -> Self {
        Self { kind: LossKind::Ritz { beta, source }, boundary: Some(boundary) }
    }

    pub fn lse(beta: f64, source: SourceFn, boundary: BoundarySet) -> Self {
        Self { kind: LossKind::Lse { beta, source }, boundary: Some(boundary) }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            LossKind::Mse => "mse",
            LossKind::MsePlusGrad => "mse_plus_grad",
            LossKind::Ritz { .. } => "ritz",
            LossKind::Lse { .. } => "lse",
        }
    }

    /// Derivative order the interior term needs.
    pub fn order(&self) -> DerivOrder {
        match self.kind {
            LossKind::Mse => DerivOrder::Value,
            LossKind::MsePlusGrad | LossKind::Ritz { .. } => DerivOrder::Gradient,
            LossKind::Lse { .. } => DerivOrder::Laplacian,
        }
    }

    pub fn validate<M: Model>(&self, model: &M, data: &Dataset) -> Result<()> {
        if data.is_empty() {
            return Err(Error::EmptyInput("loss batch is empty".into()));
        }
        if data.dim != model.input_dim() {
            return Err(Error::DimensionMismatch { expected: model.input_dim(), got: data.dim });
        }
        model.check_order(self.order())?;
        match &self.kind {
            LossKind::MsePlusGrad if data.target_grads.is_none() => {
                Err(Error::InvalidParameter("mse_plus_grad needs target gradients".into()))
            }
            LossKind::Ritz { beta, .. } | LossKind::Lse { beta, .. } => {
                if !(*beta >= 0.0) {
                    return Err(Error::InvalidParameter(format!("boundary weight must be nonnegative, got {beta}")));
                }
                match &self.boundary {
                    Some(b) if !b.values.is_empty() => Ok(()),
                    _ => Err(Error::MissingBoundary),
                }
            }
            _ => Ok(()),
        }
    }
}

/// Loss value only.
pub fn loss_value<M: Model>(model: &M, loss: &LossSpec, data: &Dataset) -> Result<f64> {
    evaluate(model, loss, data, None)
}

/// Loss value and its exact gradient with respect to the flat parameter vector.
pub fn loss_and_gradient<M: Model>(model: &M, loss: &LossSpec, data: &Dataset) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; model.num_params()];
    let value = evaluate(model, loss, data, Some(&mut grad))?;
    Ok((value, grad))
}

/// Exact gradient of the empirical loss on `batch`.
pub fn param_gradient<M: Model>(model: &M, loss: &LossSpec, batch: &Dataset) -> Result<Vec<f64>> {
    loss_and_gradient(model, loss, batch).map(|(_, g)| g)
}

fn evaluate<M: Model>(model: &M, loss: &LossSpec, data: &Dataset, grad: Option<&mut [f64]>) -> Result<f64> {
    loss.validate(model, data)?;
    let n = data.len();
    let inv_n = 1.0 / n as f64;
    let d = data.dim;
    let (out, tape) = model.forward_tape(&data.inputs, loss.order())?;

    let mut adj = OutputAdjoint { value: vec![0.0; n], grad: None, laplacian: None };
    let mut value = 0.0;
    match &loss.kind {
        LossKind::Mse | LossKind::MsePlusGrad => {
            for i in 0..n {
                let r = out.value[i] - data.targets[i];
                value += r * r * inv_n;
                adj.value[i] = 2.0 * r * inv_n;
            }
            if let LossKind::MsePlusGrad = loss.kind {
                let tg = data.target_grads.as_ref().expect("validated");
                let mut ga = vec![0.0; n * d];
                for (k, (u, t)) in out.grad.iter().zip(tg).enumerate() {
                    let r = u - t;
                    value += r * r * inv_n;
                    ga[k] = 2.0 * r * inv_n;
                }
                adj.grad = Some(ga);
            }
        }
        LossKind::Ritz { source, .. } => {
            let mut ga = vec![0.0; n * d];
            for i in 0..n {
                let g = source.eval(data.point(i));
                let gi = &out.grad[i * d..(i + 1) * d];
                let sq: f64 = gi.iter().map(|v| v * v).sum();
                value += (0.5 * sq - g * out.value[i]) * inv_n;
                adj.value[i] = -g * inv_n;
                for c in 0..d {
                    ga[i * d + c] = gi[c] * inv_n;
                }
            }
            adj.grad = Some(ga);
        }
        LossKind::Lse { source, .. } => {
            let mut la = vec![0.0; n];
            for i in 0..n {
                let r = out.laplacian[i] + source.eval(data.point(i));
                value += r * r * inv_n;
                la[i] = 2.0 * r * inv_n;
            }
            adj.laplacian = Some(la);
        }
    }

    let boundary_term = match (&loss.kind, &loss.boundary) {
        (LossKind::Ritz { beta, .. } | LossKind::Lse { beta, .. }, Some(b)) => Some((*beta, b)),
        _ => None,
    };

    if let Some(grad) = grad {
        model.backward(&tape, &adj, grad);
        if let Some((beta, b)) = boundary_term {
            let (bv, bt) = boundary_forward(model, b)?;
            let scale = beta / b.values.len() as f64;
            let mut badj = vec![0.0; b.values.len()];
            for (k, (u, g)) in bv.iter().zip(&b.values).enumerate() {
                let r = u - g;
                value += scale * r * r;
                badj[k] = 2.0 * scale * r;
            }
            model.backward(&bt, &OutputAdjoint::value_only(badj), grad);
        }
    } else if let Some((beta, b)) = boundary_term {
        let bv = model.predict(&b.inputs)?;
        let scale = beta / b.values.len() as f64;
        value += scale * bv.iter().zip(&b.values).map(|(u, g)| (u - g) * (u - g)).sum::<f64>();
    }
    Ok(value)
}

fn boundary_forward<M: Model>(model: &M, b: &BoundarySet) -> Result<(Vec<f64>, M::Tape)> {
    if b.dim != model.input_dim() {
        return Err(Error::DimensionMismatch { expected: model.input_dim(), got: b.dim });
    }
    let (out, tape) = model.forward_tape(&b.inputs, DerivOrder::Value)?;
    Ok((out.value, tape))
}

/// Plain mean squared error of predictions against `targets`.
pub fn mse(pred: &[f64], targets: &[f64]) -> f64 {
    let n = targets.len().max(1) as f64;
    pred.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / n
}
