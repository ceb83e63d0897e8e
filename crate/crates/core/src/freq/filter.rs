use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::model::gemm;

/// Low/high-frequency parts of sampled values under a Gaussian filter of width `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSplit {
    pub delta: f64,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

/// Normalized Gaussian smoothing operator over a fixed point set.
///
/// Row `i` holds `G(x_i − x_j) / Σ_j G(x_i − x_j)` with `G(r) = exp(−|r|²/(2δ²))`,
/// so constants pass through unchanged.
#[derive(Debug, Clone)]
pub struct GaussianFilter {
    delta: f64,
    n: usize,
    weights: Vec<f64>,
}

impl GaussianFilter {
    pub fn new(points: &[f64], dim: usize, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!("filter width must be positive, got {delta}")));
        }
        if dim == 0 || !points.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: points.len() });
        }
        let n = points.len() / dim;
        if n == 0 {
            return Err(Error::EmptyInput("filter needs at least one point".into()));
        }
        let mut weights = sq_distances(points, dim, n);
        let inv = 1.0 / (2.0 * delta * delta);
        for row in weights.chunks_mut(n) {
            // the self term is the row maximum, so the normalizer never underflows to zero
            for w in row.iter_mut() {
                *w = (-*w * inv).exp();
            }
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|w| *w /= s);
        }
        Ok(Self { delta, n, weights })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn low_part(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: values.len() });
        }
        let mut out = vec![0.0; self.n];
        gemm(self.n, self.n, 1, 1.0, &self.weights, (self.n, 1), values, (1, 1), 0.0, &mut out, (1, 1));
        Ok(out)
    }

    pub fn split(&self, values: &[f64]) -> Result<FilterSplit> {
        let low = self.low_part(values)?;
        let high = values.iter().zip(&low).map(|(v, l)| v - l).collect();
        Ok(FilterSplit { delta: self.delta, low, high })
    }

    /// `(e_low, e_high)` of model values against a pre-split target.
    pub fn errors(&self, target: &FilterSplit, model: &[f64]) -> Result<FilteredErrors> {
        let m = self.split(model)?;
        let total: f64 = target.low.iter().zip(&target.high).map(|(l, h)| (l + h) * (l + h)).sum();
        Ok(FilteredErrors {
            delta: self.delta,
            e_low: ratio(&target.low, &m.low, total),
            e_high: ratio(&target.high, &m.high, total),
        })
    }
}

/// Pairwise squared distances, `n × n`, via `‖x‖² + ‖y‖² − 2x·y` clamped at zero.
fn sq_distances(points: &[f64], dim: usize, n: usize) -> Vec<f64> {
    let norms: Vec<f64> = points.chunks(dim).map(|x| x.iter().map(|v| v * v).sum()).collect();
    let mut out = vec![0.0; n * n];
    if dim == 1 {
        for i in 0..n {
            for j in 0..n {
                let r = points[i] - points[j];
                out[i * n + j] = r * r;
            }
        }
        return out;
    }
    gemm(n, dim, n, -2.0, points, (dim, 1), points, (1, dim), 0.0, &mut out, (n, 1));
    for i in 0..n {
        for j in 0..n {
            let v = &mut out[i * n + j];
            *v = if i == j { 0.0 } else { (*v + norms[i] + norms[j]).max(0.0) };
        }
    }
    out
}

/// `None` when the target part is zero up to rounding relative to the whole signal.
fn ratio(target: &[f64], model: &[f64], total: f64) -> Option<f64> {
    let den: f64 = target.iter().map(|v| v * v).sum();
    if den <= 1e-24 * total || den == 0.0 {
        return None;
    }
    let num: f64 = target.iter().zip(model).map(|(t, h)| (t - h) * (t - h)).sum();
    Some((num / den).sqrt())
}

/// One-shot split of `values` sampled at `points` (row-major `n × dim`).
pub fn gaussian_split(points: &[f64], dim: usize, values: &[f64], delta: f64) -> Result<FilterSplit> {
    GaussianFilter::new(points, dim, delta)?.split(values)
}

/// Normalized fitting errors of the low and high parts; `None` marks a zero-norm target part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilteredErrors {
    pub delta: f64,
    pub e_low: Option<f64>,
    pub e_high: Option<f64>,
}

pub fn filtered_errors(target: &[f64], model: &[f64], points: &[f64], dim: usize, delta: f64) -> Result<FilteredErrors> {
    if target.len() != model.len() {
        return Err(Error::DimensionMismatch { expected: target.len(), got: model.len() });
    }
    let filter = GaussianFilter::new(points, dim, delta)?;
    let t = filter.split(target)?;
    filter.errors(&t, model)
}
