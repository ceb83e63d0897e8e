use fplab_core::nn::Dataset;
use serde::{Deserialize, Serialize};

use crate::error::{IoError, IoResult};

/// Per-feature affine map applied at load time: `stored = (raw − shift) · scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Normalization {
    pub fn uniform(dim: usize, shift: f64, scale: f64) -> Self {
        Self { shift: vec![shift; dim], scale: vec![scale; dim] }
    }

    /// Recover raw feature values from stored ones.
    pub fn invert(&self, stored: &[f64]) -> Vec<f64> {
        let d = self.scale.len();
        stored.iter().enumerate().map(|(i, v)| v / self.scale[i % d] + self.shift[i % d]).collect()
    }
}

/// Row-major `n × dim` inputs with one real target each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub dim: usize,
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
    pub provenance: String,
    pub normalization: Normalization,
}

impl LabeledDataset {
    pub fn new(dim: usize, inputs: Vec<f64>, targets: Vec<f64>, provenance: impl Into<String>, normalization: Normalization) -> IoResult<Self> {
        if targets.is_empty() {
            return Err(IoError::Invalid("dataset has no samples".into()));
        }
        if dim == 0 || inputs.len() != dim * targets.len() {
            return Err(IoError::Invalid(format!("{} inputs do not form {} rows of width {dim}", inputs.len(), targets.len())));
        }
        if inputs.iter().chain(&targets).any(|v| !v.is_finite()) {
            return Err(IoError::Invalid("non-finite entry".into()));
        }
        if normalization.scale.len() != dim || normalization.shift.len() != dim || normalization.scale.iter().any(|s| *s == 0.0 || !s.is_finite()) {
            return Err(IoError::Invalid("normalization must be an invertible per-feature map".into()));
        }
        Ok(Self { dim, inputs, targets, provenance: provenance.into(), normalization })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// The first `n` samples (all of them when `n` exceeds the count).
    pub fn truncated(mut self, n: usize) -> Self {
        let n = n.min(self.len());
        self.inputs.truncate(n * self.dim);
        self.targets.truncate(n);
        self
    }

    pub fn to_dataset(&self) -> IoResult<Dataset> {
        Ok(Dataset::new(self.dim, self.inputs.clone(), self.targets.clone())?)
    }
}
