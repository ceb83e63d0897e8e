use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freq::projection::normalize_sign;
use crate::nn::model::{gemm, tangent_features, Model};

/// Eigenvalues in descending order with matching unit eigenvectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    /// `vectors[k]` pairs with `values[k]`; the largest-magnitude entry of each is positive.
    pub vectors: Vec<Vec<f64>>,
}

impl Eigenpairs {
    /// Coefficients `V^T u` of `u` in the eigenbasis.
    pub fn coefficients(&self, u: &[f64]) -> Vec<f64> {
        self.vectors.iter().map(|v| v.iter().zip(u).map(|(a, b)| a * b).sum()).collect()
    }
}

/// Dense symmetric eigendecomposition (row-major `n × n` input).
pub fn eigen(matrix: &[f64], n: usize) -> Result<Eigenpairs> {
    if matrix.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, got: matrix.len() });
    }
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(n, n, matrix));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = idx
        .iter()
        .map(|&i| {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            normalize_sign(&mut v);
            v
        })
        .collect();
    Ok(Eigenpairs { values, vectors })
}

/// Symmetric PSD kernel matrix on a point set, with its eigenpairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramKernel {
    pub dim: usize,
    pub points: Vec<f64>,
    /// Row-major `n × n`.
    pub matrix: Vec<f64>,
    pub eigen: Eigenpairs,
}

impl GramKernel {
    /// Validate symmetry and positive semi-definiteness, then decompose.
    pub fn from_matrix(points: Vec<f64>, dim: usize, matrix: Vec<f64>) -> Result<Self> {
        if dim == 0 || !points.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: points.len() });
        }
        let n = points.len() / dim;
        if n == 0 {
            return Err(Error::EmptyInput("kernel needs at least one point".into()));
        }
        if matrix.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: matrix.len() });
        }
        let scale = matrix.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in 0..i {
                if (matrix[i * n + j] - matrix[j * n + i]).abs() > 1e-10 * scale {
                    return Err(Error::InvalidParameter(format!("kernel not symmetric at ({i},{j})")));
                }
            }
        }
        let eigen = eigen(&matrix, n)?;
        let top = eigen.values[0].max(0.0);
        if let Some(low) = eigen.values.last() {
            if *low < -1e-8 * top.max(scale * 1e-8) {
                return Err(Error::InvalidParameter(format!("kernel not positive semi-definite: eigenvalue {low:e}")));
            }
        }
        Ok(Self { dim, points, matrix, eigen })
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.len() + j]
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        gemm(n, n, 1, 1.0, &self.matrix, (n, 1), u, (1, 1), 0.0, &mut out, (1, 1));
        out
    }
}

/// Tangent-feature Gram matrix `K_ij = ∇_θ f(x_i)·∇_θ f(x_j)` at the current parameters.
pub fn empirical_gram<M: Model>(model: &M, inputs: &[f64]) -> Result<GramKernel> {
    let dim = model.input_dim();
    let feats = tangent_features(model, inputs)?;
    let n = inputs.len() / dim;
    if n == 0 {
        return Err(Error::EmptyInput("gram needs at least one input".into()));
    }
    let p = model.num_params();
    let mut k = vec![0.0; n * n];
    gemm(n, p, n, 1.0, &feats, (p, 1), &feats, (1, p), 0.0, &mut k, (n, 1));
    // exact symmetry regardless of the kernel's summation order
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (k[i * n + j] + k[j * n + i]);
            k[i * n + j] = s;
            k[j * n + i] = s;
        }
    }
    GramKernel::from_matrix(inputs.to_vec(), dim, k)
}
