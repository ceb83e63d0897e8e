use crate::error::{Error, Result};

/// How many input derivatives a forward pass carries alongside the value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DerivOrder {
    Value,
    Gradient,
    Laplacian,
}

/// Model outputs for a batch of `n` inputs of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    pub n: usize,
    pub dim: usize,
    pub value: Vec<f64>,
    /// Row-major `n × dim` input gradient; empty below [`DerivOrder::Gradient`].
    pub grad: Vec<f64>,
    /// Laplacian per sample; empty below [`DerivOrder::Laplacian`].
    pub laplacian: Vec<f64>,
}

/// Loss sensitivities with respect to each output channel, laid out like [`ModelOutput`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutputAdjoint {
    pub value: Vec<f64>,
    pub grad: Option<Vec<f64>>,
    pub laplacian: Option<Vec<f64>>,
}

impl OutputAdjoint {
    pub fn value_only(value: Vec<f64>) -> Self {
        Self { value, grad: None, laplacian: None }
    }
}

/// A scalar-output model with exact input derivatives and reverse-mode parameter gradients.
///
/// Inputs are passed row-major as a flat slice of `n × input_dim` reals.
pub trait Model: Clone + Send + Sync {
    type Tape;

    fn input_dim(&self) -> usize;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];

    fn num_params(&self) -> usize {
        self.params().len()
    }

    /// Fails when the model cannot provide derivatives of this order.
    fn check_order(&self, order: DerivOrder) -> Result<()>;

    fn forward_tape(&self, inputs: &[f64], order: DerivOrder) -> Result<(ModelOutput, Self::Tape)>;

    /// Accumulates `∂L/∂θ` into `grad` given output adjoints for the taped pass.
    fn backward(&self, tape: &Self::Tape, adjoint: &OutputAdjoint, grad: &mut [f64]);

    fn eval(&self, inputs: &[f64], order: DerivOrder) -> Result<ModelOutput> {
        self.forward_tape(inputs, order).map(|(out, _)| out)
    }

    fn predict(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        self.eval(inputs, DerivOrder::Value).map(|out| out.value)
    }
}

pub(crate) fn batch_len(inputs: &[f64], dim: usize) -> Result<usize> {
    if dim == 0 || !inputs.len().is_multiple_of(dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: inputs.len() });
    }
    Ok(inputs.len() / dim)
}

/// Gradient of the scalar output with respect to every parameter, one row per input.
///
/// Row-major `n × num_params`; the rows are the tangent features of the kernel regime.
pub fn tangent_features<M: Model>(model: &M, inputs: &[f64]) -> Result<Vec<f64>> {
    let dim = model.input_dim();
    let n = batch_len(inputs, dim)?;
    let p = model.num_params();
    let mut out = vec![0.0; n * p];
    for (i, row) in out.chunks_mut(p).enumerate() {
        let x = &inputs[i * dim..(i + 1) * dim];
        let (_, tape) = model.forward_tape(x, DerivOrder::Value)?;
        model.backward(&tape, &OutputAdjoint::value_only(vec![1.0]), row);
    }
    Ok(out)
}

/// Thin wrapper over `matrixmultiply::dgemm` for `C = alpha·A·B + beta·C` with explicit strides.
#[allow(clippy::too_many_arguments)]
#[inline]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
    (rsc, csc): (usize, usize),
) {
    if m == 0 || n == 0 {
        return;
    }
    debug_assert!(k == 0 || a.len() > (m - 1) * rsa + (k - 1) * csa);
    debug_assert!(k == 0 || b.len() > (k - 1) * rsb + (n - 1) * csb);
    debug_assert!(c.len() > (m - 1) * rsc + (n - 1) * csc);
    // SAFETY: the debug assertions above describe the extents touched by dgemm;
    // every caller passes buffers sized to the stated shapes and strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            csc as isize,
        );
    }
}
