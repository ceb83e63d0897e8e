use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    Gd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam_default() -> Self {
        OptimizerKind::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BatchMode {
    Full,
    /// Minibatches in an order drawn from `shuffle_seed`, independent of the init seed.
    MiniBatch { size: usize, shuffle_seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSpec {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub batch: BatchMode,
}

impl OptimizerSpec {
    pub fn adam(learning_rate: f64) -> Self {
        Self { kind: OptimizerKind::adam_default(), learning_rate, batch: BatchMode::Full }
    }

    pub fn gd(learning_rate: f64) -> Self {
        Self { kind: OptimizerKind::Gd, learning_rate, batch: BatchMode::Full }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidParameter(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if let OptimizerKind::Adam { beta1, beta2, eps } = self.kind {
            let open = |b: f64| b > 0.0 && b < 1.0;
            if !open(beta1) || !open(beta2) {
                return Err(Error::InvalidParameter(format!("adam decay rates must lie in (0,1): {beta1}, {beta2}")));
            }
            if !(eps > 0.0) {
                return Err(Error::InvalidParameter(format!("adam eps must be positive, got {eps}")));
            }
        }
        if let BatchMode::MiniBatch { size: 0, .. } = self.batch {
            return Err(Error::InvalidParameter("minibatch size must be positive".into()));
        }
        Ok(())
    }
}

/// Mutable optimizer state for one parameter vector.
#[derive(Debug, Clone)]
pub struct Optimizer {
    spec: OptimizerSpec,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Optimizer {
    pub fn new(spec: OptimizerSpec, num_params: usize) -> Result<Self> {
        spec.validate()?;
        let moments = matches!(spec.kind, OptimizerKind::Adam { .. });
        let len = if moments { num_params } else { 0 };
        Ok(Self { spec, m: vec![0.0; len], v: vec![0.0; len], t: 0 })
    }

    pub fn spec(&self) -> &OptimizerSpec {
        &self.spec
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        let lr = self.spec.learning_rate;
        self.t += 1;
        match self.spec.kind {
            OptimizerKind::Gd => {
                params.iter_mut().zip(grad).for_each(|(p, g)| *p -= lr * g);
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let c1 = 1.0 - beta1.powi(self.t.min(i32::MAX as u64) as i32);
                let c2 = 1.0 - beta2.powi(self.t.min(i32::MAX as u64) as i32);
                for ((p, g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                }
            }
        }
    }
}
