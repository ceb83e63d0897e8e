use serde::{Deserialize, Serialize};

use super::poisson::{sine_mode, PoissonSystem};
use crate::error::{Error, Result};

/// Contraction factor of Jacobi on sine mode `k`: `cos(kπ/n)`.
pub fn jacobi_mode_rate(n: usize, k: usize) -> Result<f64> {
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!("mode {k} outside 1..={}", n.saturating_sub(1))));
    }
    Ok((k as f64 * std::f64::consts::PI / n as f64).cos())
}

/// Error coefficients `α_k^t` in the sine basis, with `e^t = Σ_k α_k^t w_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeErrorTrace {
    pub n: usize,
    /// Modes `1..n−1`; `coeffs[r][k−1]` belongs to `iterations[r]`.
    pub iterations: Vec<u64>,
    pub coeffs: Vec<Vec<f64>>,
    /// Max-norm of the raw error at each recorded iteration.
    pub max_error: Vec<f64>,
}

impl ModeErrorTrace {
    pub fn mode_series(&self, k: usize) -> Vec<f64> {
        self.coeffs.iter().map(|c| c[k - 1]).collect()
    }

    /// Ratios `α_k^{t+1}/α_k^t` between consecutive iterations, skipping coefficients
    /// below `floor` times the largest initial coefficient.
    pub fn contractions(&self, k: usize, floor: f64) -> Vec<f64> {
        let scale = self.coeffs.first().map_or(0.0, |c| c.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let series = self.mode_series(k);
        self.iterations
            .windows(2)
            .zip(series.windows(2))
            .filter(|(t, a)| t[1] == t[0] + 1 && a[0].abs() > floor * scale)
            .map(|(_, a)| a[1] / a[0])
            .collect()
    }

    /// First recorded iteration with `|α_k^t| < threshold·|α_k^0|`.
    pub fn iterations_to_threshold(&self, k: usize, threshold: f64) -> Option<u64> {
        let series = self.mode_series(k);
        let a0 = series.first()?.abs();
        if a0 == 0.0 {
            return Some(0);
        }
        self.iterations.iter().zip(&series).find(|(_, a)| a.abs() < threshold * a0).map(|(t, _)| *t)
    }
}

/// Projection onto the sine basis: `α_k = (2/n) w_kᵀ e`.
#[derive(Debug, Clone)]
pub struct SineBasis {
    n: usize,
    /// Row `k−1` holds `w_k`.
    table: Vec<f64>,
}

impl SineBasis {
    pub fn new(n: usize) -> Self {
        let table = (1..n).flat_map(|k| sine_mode(n, k)).collect();
        Self { n, table }
    }

    pub fn coefficients(&self, e: &[f64]) -> Vec<f64> {
        let m = self.n - 1;
        let scale = 2.0 / self.n as f64;
        self.table.chunks(m).map(|w| scale * w.iter().zip(e).map(|(a, b)| a * b).sum::<f64>()).collect()
    }

    pub fn reconstruct(&self, coeffs: &[f64]) -> Vec<f64> {
        let m = self.n - 1;
        let mut e = vec![0.0; m];
        for (w, a) in self.table.chunks(m).zip(coeffs) {
            e.iter_mut().zip(w).for_each(|(x, v)| *x += a * v);
        }
        e
    }
}

/// Final iterate of a Jacobi run and its mode-resolved error history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiRun {
    pub solution: Vec<f64>,
    pub trace: ModeErrorTrace,
}

/// `T` Jacobi sweeps from `u0`, recording the error against the direct solution every
/// `record_every` iterations (and at `T`).
pub fn jacobi_run(sys: &PoissonSystem, u0: &[f64], iterations: u64, record_every: u64) -> Result<JacobiRun> {
    let m = sys.size();
    if u0.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: u0.len() });
    }
    let exact = sys.solve_direct();
    let basis = SineBasis::new(sys.n);
    let mut trace = ModeErrorTrace { n: sys.n, iterations: Vec::new(), coeffs: Vec::new(), max_error: Vec::new() };
    let mut u = u0.to_vec();
    let mut next = vec![0.0; m];
    let every = record_every.max(1);
    for t in 0..=iterations {
        if t % every == 0 || t == iterations {
            let e: Vec<f64> = u.iter().zip(&exact).map(|(a, b)| a - b).collect();
            trace.iterations.push(t);
            trace.coeffs.push(basis.coefficients(&e));
            trace.max_error.push(e.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        }
        if t == iterations {
            break;
        }
        sys.jacobi_step(&u, &mut next);
        std::mem::swap(&mut u, &mut next);
    }
    Ok(JacobiRun { solution: u, trace })
}

/// Max-norm error of Jacobi iterates against `reference` at the nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiErrorCurve {
    /// `(iteration, max-norm error)` at log-spaced iterations and at the end.
    pub samples: Vec<(u64, f64)>,
    /// First iteration whose error is below the target, if one was given and reached.
    pub reached_at: Option<u64>,
    pub solution: Vec<f64>,
}

/// Iterate up to `max_iterations`, stopping early once the max-norm error drops below `target`.
pub fn jacobi_until(sys: &PoissonSystem, u0: &[f64], reference: &[f64], max_iterations: u64, target: Option<f64>) -> Result<JacobiErrorCurve> {
    let m = sys.size();
    if u0.len() != m || reference.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: u0.len().min(reference.len()) });
    }
    let err = |u: &[f64]| u.iter().zip(reference).fold(0.0f64, |a, (x, r)| a.max((x - r).abs()));
    let mut u = u0.to_vec();
    let mut next = vec![0.0; m];
    let mut samples = Vec::new();
    let mut next_sample = 1u64;
    let mut reached_at = None;
    for t in 0..=max_iterations {
        let e = err(&u);
        let hit = target.is_some_and(|th| e < th);
        if t == 0 || t >= next_sample || hit || t == max_iterations {
            samples.push((t, e));
            while next_sample <= t {
                next_sample = (next_sample * 5).div_ceil(4).max(next_sample + 1);
            }
        }
        if hit {
            reached_at = Some(t);
            break;
        }
        if t == max_iterations {
            break;
        }
        sys.jacobi_step(&u, &mut next);
        std::mem::swap(&mut u, &mut next);
    }
    Ok(JacobiErrorCurve { samples, reached_at, solution: u })
}
