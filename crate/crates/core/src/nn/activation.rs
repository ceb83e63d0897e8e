use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pointwise nonlinearity of a hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivationKind {
    Tanh,
    Relu,
    /// Mexican-hat wavelet `(1/(15a)) π^{1/4} (1 − (x/a)²) exp(−(x/a)²/2)`.
    Ricker { a: f64 },
    Sine,
    /// Compactly supported `relu(x)·relu(1 − x)`.
    Compact,
}

/// Value and the first three derivatives of an activation at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl ActivationKind {
    pub fn name(&self) -> &'static str {
        match self {
            ActivationKind::Tanh => "tanh",
            ActivationKind::Relu => "relu",
            ActivationKind::Ricker { .. } => "ricker",
            ActivationKind::Sine => "sine",
            ActivationKind::Compact => "compact",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ActivationKind::Ricker { a } = self {
            if !(*a > 0.0) || !a.is_finite() {
                return Err(Error::InvalidParameter(format!("ricker width must be positive, got {a}")));
            }
        }
        Ok(())
    }

    /// Whether the second derivative exists everywhere (needed for Laplacian-bearing losses).
    pub fn twice_differentiable(&self) -> bool {
        matches!(self, ActivationKind::Tanh | ActivationKind::Ricker { .. } | ActivationKind::Sine)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::Relu => x.max(0.0),
            ActivationKind::Ricker { a } => {
                let u = x / a;
                ricker_scale(a) * (1.0 - u * u) * (-0.5 * u * u).exp()
            }
            ActivationKind::Sine => x.sin(),
            ActivationKind::Compact => compact(x),
        }
    }

    /// Value and derivatives up to third order. Piecewise activations report the
    /// almost-everywhere derivatives (zero at and beyond kinks).
    #[inline]
    pub fn jet(&self, x: f64) -> Jet {
        match *self {
            ActivationKind::Tanh => {
                let t = x.tanh();
                let d1 = 1.0 - t * t;
                Jet { v: t, d1, d2: -2.0 * t * d1, d3: -2.0 * d1 * (1.0 - 3.0 * t * t) }
            }
            ActivationKind::Relu => {
                if x > 0.0 {
                    Jet { v: x, d1: 1.0, d2: 0.0, d3: 0.0 }
                } else {
                    Jet { v: 0.0, d1: 0.0, d2: 0.0, d3: 0.0 }
                }
            }
            ActivationKind::Ricker { a } => {
                let u = x / a;
                let u2 = u * u;
                let e = ricker_scale(a) * (-0.5 * u2).exp();
                Jet {
                    v: e * (1.0 - u2),
                    d1: e * (u2 * u - 3.0 * u) / a,
                    d2: e * (-u2 * u2 + 6.0 * u2 - 3.0) / (a * a),
                    d3: e * (u2 * u2 * u - 10.0 * u2 * u + 15.0 * u) / (a * a * a),
                }
            }
            ActivationKind::Sine => {
                let (s, c) = x.sin_cos();
                Jet { v: s, d1: c, d2: -s, d3: -c }
            }
            ActivationKind::Compact => {
                if x > 0.0 && x < 1.0 {
                    Jet { v: x * (1.0 - x), d1: 1.0 - 2.0 * x, d2: -2.0, d3: 0.0 }
                } else {
                    Jet { v: 0.0, d1: 0.0, d2: 0.0, d3: 0.0 }
                }
            }
        }
    }
}

#[inline]
fn ricker_scale(a: f64) -> f64 {
    std::f64::consts::PI.powf(0.25) / (15.0 * a)
}

/// `relu(x)·relu(1 − x)`: zero outside `[0, 1]`, peak 0.25 at the midpoint.
#[inline]
pub fn compact(x: f64) -> f64 {
    x.max(0.0) * (1.0 - x).max(0.0)
}
