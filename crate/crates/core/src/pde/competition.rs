use serde::{Deserialize, Serialize};

use super::jacobi::SineBasis;
use super::poisson::PoissonSystem;
use crate::error::{Error, Result};
use crate::ntk::gram::GramKernel;

/// Operator composed with the kernel in the error flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowOperator {
    /// Stencil rows inside, `C/h²` on the two boundary diagonals with `C = h^{3/2}`.
    Augmented,
    Identity,
}

/// Applies `Ā` on the `n + 1` grid values including both boundary nodes.
fn apply_augmented(e: &[f64], h: f64, out: &mut [f64]) {
    let last = e.len() - 1;
    let inv = 1.0 / (h * h);
    let c = h.powf(1.5);
    out[0] = c * inv * e[0];
    out[last] = c * inv * e[last];
    for i in 1..last {
        out[i] = (2.0 * e[i] - e[i - 1] - e[i + 1]) * inv;
    }
}

/// Error trajectory of `dē/dt = −(1/N) K Ā² ē` with `N = 1/h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetitionFlow {
    pub dt: f64,
    /// Largest eigenvalue of `(1/N) K Ā²` from power iteration.
    pub top_rate: f64,
    pub times: Vec<f64>,
    pub errors: Vec<Vec<f64>>,
    /// Sine-mode coefficients of the interior error, modes `1..n−1`.
    pub mode_coeffs: Vec<Vec<f64>>,
}

impl CompetitionFlow {
    /// Mean exponential decay rate of mode `k` over the run; `None` if it starts at zero.
    pub fn decay_rate(&self, k: usize) -> Option<f64> {
        let a0 = self.mode_coeffs.first()?[k - 1].abs();
        let a1 = self.mode_coeffs.last()?[k - 1].abs();
        let t = *self.times.last()?;
        if a0 < 1e-300 || t <= 0.0 {
            return None;
        }
        Some(-(a1.max(1e-300) / a0).ln() / t)
    }

    /// Decay rates of every mode `1..n−1`.
    pub fn decay_rates(&self) -> Vec<Option<f64>> {
        let m = self.mode_coeffs.first().map_or(0, Vec::len);
        (1..=m).map(|k| self.decay_rate(k)).collect()
    }
}

struct FlowOp<'a> {
    kernel: &'a GramKernel,
    operator: FlowOperator,
    h: f64,
    inv_big_n: f64,
}

impl FlowOp<'_> {
    fn apply(&self, e: &[f64]) -> Vec<f64> {
        let mut tmp = vec![0.0; e.len()];
        let sq = match self.operator {
            FlowOperator::Augmented => {
                let mut sq = vec![0.0; e.len()];
                apply_augmented(e, self.h, &mut tmp);
                apply_augmented(&tmp, self.h, &mut sq);
                sq
            }
            FlowOperator::Identity => e.to_vec(),
        };
        let mut out = self.kernel.apply(&sq);
        out.iter_mut().for_each(|v| *v *= self.inv_big_n);
        out
    }

    /// Power iteration on a deterministic start vector.
    fn top_eigenvalue(&self, dim: usize) -> f64 {
        let mut v: Vec<f64> = (0..dim).map(|i| 1.0 + 0.5 * ((i * 7919) % 97) as f64 / 97.0).collect();
        let mut lam = 0.0;
        for _ in 0..500 {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            v.iter_mut().for_each(|x| *x /= norm);
            let w = self.apply(&v);
            let next = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            let done = (next - lam).abs() <= 1e-9 * next;
            lam = next;
            v = w;
            if done {
                break;
            }
        }
        lam
    }
}

/// Explicit Euler on the competition flow. `dt = None` picks `0.5/λ_max`; a given
/// step with `dt·λ_max ≥ 2` is rejected.
pub fn operator_competition_flow(
    kernel: &GramKernel,
    sys: &PoissonSystem,
    operator: FlowOperator,
    e0: &[f64],
    dt: Option<f64>,
    steps: usize,
    record_every: usize,
) -> Result<CompetitionFlow> {
    let size = sys.n + 1;
    if kernel.len() != size {
        return Err(Error::DimensionMismatch { expected: size, got: kernel.len() });
    }
    if e0.len() != size {
        return Err(Error::DimensionMismatch { expected: size, got: e0.len() });
    }
    let op = FlowOp { kernel, operator, h: sys.h, inv_big_n: sys.h };
    let top_rate = op.top_eigenvalue(size);
    let dt = match dt {
        None if top_rate > 0.0 => 0.5 / top_rate,
        None => return Err(Error::Degenerate("flow operator is zero".into())),
        Some(d) if d > 0.0 && d * top_rate < 2.0 => d,
        Some(d) => return Err(Error::Unstable(format!("step {d} with top rate {top_rate} violates dt·λ < 2"))),
    };
    let basis = SineBasis::new(sys.n);
    let every = record_every.max(1);
    let mut flow = CompetitionFlow { dt, top_rate, times: Vec::new(), errors: Vec::new(), mode_coeffs: Vec::new() };
    let mut e = e0.to_vec();
    for t in 0..=steps {
        if t % every == 0 || t == steps {
            flow.times.push(t as f64 * dt);
            flow.mode_coeffs.push(basis.coefficients(&e[1..sys.n]));
            flow.errors.push(e.clone());
        }
        if t == steps {
            break;
        }
        let de = op.apply(&e);
        e.iter_mut().zip(&de).for_each(|(x, d)| *x -= dt * d);
        if e.iter().any(|x| !x.is_finite()) {
            return Err(Error::Unstable(format!("non-finite error at step {}", t + 1)));
        }
    }
    Ok(flow)
}
