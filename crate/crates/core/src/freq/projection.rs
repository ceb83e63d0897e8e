use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::nn::model::gemm;

/// Unit top eigenvector of the sample covariance, with its largest-magnitude coordinate positive.
pub fn principal_direction(points: &[f64], dim: usize) -> Result<Vec<f64>> {
    if dim == 0 || !points.len().is_multiple_of(dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: points.len() });
    }
    let n = points.len() / dim;
    if n < 2 {
        return Err(Error::Degenerate("principal direction needs at least two points".into()));
    }
    let mut mean = vec![0.0; dim];
    for x in points.chunks(dim) {
        mean.iter_mut().zip(x).for_each(|(m, v)| *m += v / n as f64);
    }
    let centered: Vec<f64> = points.chunks(dim).flat_map(|x| x.iter().zip(&mean).map(|(v, m)| v - m)).collect();
    if centered.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate("all points identical".into()));
    }
    let mut cov = vec![0.0; dim * dim];
    gemm(dim, n, dim, 1.0 / (n - 1) as f64, &centered, (1, dim), &centered, (dim, 1), 0.0, &mut cov, (dim, 1));
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(dim, dim, &cov));
    let top = (0..dim).max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).expect("dim > 0");
    let mut v: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
    normalize_sign(&mut v);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(v)
}

/// Flip `v` so that its largest-magnitude entry is positive (first such entry on ties).
pub fn normalize_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Points projected onto a direction, with values carried over in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
    /// Set when the supplied direction was not unit length and had to be normalized.
    pub renormalized: bool,
}

pub fn project_dataset(points: &[f64], dim: usize, values: &[f64], direction: &[f64]) -> Result<Projection> {
    if direction.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: direction.len() });
    }
    if points.len() != dim * values.len() {
        return Err(Error::DimensionMismatch { expected: dim * values.len(), got: points.len() });
    }
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::InvalidParameter("projection direction must be nonzero".into()));
    }
    let renormalized = (norm - 1.0).abs() > 1e-12;
    let coords = points.chunks(dim).map(|x| x.iter().zip(direction).map(|(a, b)| a * b).sum::<f64>() / norm).collect();
    Ok(Projection { coords, values: values.to_vec(), renormalized })
}

/// Symmetric probe grid `{0, ±1/L, …, ±m/L}` with `L` the span of `coords`, in ascending order.
pub fn default_probe_grid(coords: &[f64], m: usize) -> Result<Vec<f64>> {
    let lo = coords.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = coords.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if !(span > 0.0) {
        return Err(Error::Degenerate("projected coordinates have zero span".into()));
    }
    Ok((-(m as i64)..=m as i64).map(|j| j as f64 / span).collect())
}
