//! Monomial-basis polynomial models trained by gradient descent.

use serde::{Deserialize, Serialize};

use super::loss::{loss_value, Dataset, LossSpec};
use super::model::{batch_len, DerivOrder, Model, ModelOutput, OutputAdjoint};
use super::optim::{BatchMode, Optimizer, OptimizerSpec};
use super::train::{is_divergent, stop_reached, train, ProbeSpec, Recorder, RunMeta, Schedule};
use crate::error::{Error, Result};
use crate::record::RunRecord;

/// `h(x) = Σ_{j=0..degree} c_j x^j` on scalar inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialModel {
    coeffs: Vec<f64>,
}

pub struct PolyTape {
    xs: Vec<f64>,
    order: DerivOrder,
}

impl PolynomialModel {
    pub fn zeros(degree: usize) -> Self {
        Self { coeffs: vec![0.0; degree + 1] }
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::EmptyInput("polynomial needs at least one coefficient".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

/// `x^j`, `j x^{j−1}` and `j(j−1) x^{j−2}` for `j = 0..=degree`.
fn basis(x: f64, p: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut pow = vec![1.0; p];
    for j in 1..p {
        pow[j] = pow[j - 1] * x;
    }
    let d1 = (0..p).map(|j| if j >= 1 { j as f64 * pow[j - 1] } else { 0.0 }).collect();
    let d2 = (0..p).map(|j| if j >= 2 { (j * (j - 1)) as f64 * pow[j - 2] } else { 0.0 }).collect();
    (pow, d1, d2)
}

impl Model for PolynomialModel {
    type Tape = PolyTape;

    fn input_dim(&self) -> usize {
        1
    }

    fn params(&self) -> &[f64] {
        &self.coeffs
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    fn check_order(&self, _order: DerivOrder) -> Result<()> {
        Ok(())
    }

    fn forward_tape(&self, inputs: &[f64], order: DerivOrder) -> Result<(ModelOutput, PolyTape)> {
        let n = batch_len(inputs, 1)?;
        let p = self.coeffs.len();
        let mut out = ModelOutput { n, dim: 1, value: Vec::with_capacity(n), grad: Vec::new(), laplacian: Vec::new() };
        for &x in inputs {
            let (b0, b1, b2) = basis(x, p);
            let dot = |b: &[f64]| b.iter().zip(&self.coeffs).map(|(u, c)| u * c).sum::<f64>();
            out.value.push(dot(&b0));
            if order >= DerivOrder::Gradient {
                out.grad.push(dot(&b1));
            }
            if order >= DerivOrder::Laplacian {
                out.laplacian.push(dot(&b2));
            }
        }
        Ok((out, PolyTape { xs: inputs.to_vec(), order }))
    }

    fn backward(&self, tape: &PolyTape, adj: &OutputAdjoint, grad: &mut [f64]) {
        let p = self.coeffs.len();
        for (i, &x) in tape.xs.iter().enumerate() {
            let (b0, b1, b2) = basis(x, p);
            for j in 0..p {
                grad[j] += adj.value[i] * b0[j];
            }
            if let (Some(g), true) = (&adj.grad, tape.order >= DerivOrder::Gradient) {
                for j in 0..p {
                    grad[j] += g[i] * b1[j];
                }
            }
            if let (Some(l), true) = (&adj.laplacian, tape.order >= DerivOrder::Laplacian) {
                for j in 0..p {
                    grad[j] += l[i] * b2[j];
                }
            }
        }
    }
}

/// Fit a degree-`degree` polynomial to 1-d data by gradient descent on the mean squared error.
///
/// Full-batch runs use the normal-equation form `∇L = (2/n)(Gc − Vᵀy)` with
/// `G = VᵀV`; the iterates are the same as with the explicit residual, at a cost
/// independent of `n`. Coefficients are snapshotted at every recorded epoch.
pub fn polynomial_fit_gd(
    degree: usize,
    data: &Dataset,
    opt: &OptimizerSpec,
    schedule: &Schedule,
    probes: &ProbeSpec,
    meta: &RunMeta,
) -> Result<(PolynomialModel, RunRecord)> {
    if data.dim != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: data.dim });
    }
    if data.is_empty() {
        return Err(Error::EmptyInput("polynomial fit needs data".into()));
    }
    let mut sorted = data.inputs.clone();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Degenerate("data points must be distinct".into()));
    }
    let mut model = PolynomialModel::zeros(degree);
    let loss = LossSpec::mse();
    let mut probes = probes.clone();
    probes.snapshot_params = true;
    if probes.snapshot_inputs.is_none() {
        probes.snapshot_inputs = Some(data.inputs.clone());
    }
    if !matches!(opt.batch, BatchMode::Full) {
        let mut sched = schedule.clone();
        sched.snapshots = (0..=schedule.epochs).filter(|&e| schedule.record.is_record_epoch(e)).collect();
        let rec = train(&mut model, data, &loss, opt, &sched, &probes, meta)?;
        return Ok((model, rec));
    }

    let p = degree + 1;
    let n = data.len() as f64;
    let mut gram = vec![0.0; p * p];
    let mut vty = vec![0.0; p];
    for (&x, &y) in data.inputs.iter().zip(&data.targets) {
        let (b, _, _) = basis(x, p);
        for i in 0..p {
            vty[i] += b[i] * y;
            for j in 0..p {
                gram[i * p + j] += b[i] * b[j];
            }
        }
    }
    let yy: f64 = data.targets.iter().map(|y| y * y).sum();

    let recorder = Recorder::new(&probes)?;
    let mut record = recorder.empty_record(meta);
    let mut optimizer = Optimizer::new(*opt, p)?;
    let mut grad = vec![0.0; p];
    for e in 0..=schedule.epochs {
        let c = &model.coeffs;
        let mut quad = 0.0;
        for i in 0..p {
            let gi: f64 = (0..p).map(|j| gram[i * p + j] * c[j]).sum();
            quad += c[i] * gi;
            grad[i] = 2.0 / n * (gi - vty[i]);
        }
        let cheap_loss = (quad - 2.0 * vty.iter().zip(c).map(|(a, b)| a * b).sum::<f64>() + yy) / n;
        let last = e == schedule.epochs;
        let divergent = is_divergent(cheap_loss) || model.coeffs.iter().any(|v| !v.is_finite());
        if last || divergent || schedule.record.is_record_epoch(e) {
            let v = if divergent { f64::INFINITY } else { loss_value(&model, &loss, data)? };
            let rec = recorder.observe(&model, e, v)?;
            let stop = stop_reached(schedule.stop, &rec);
            record.epochs.push(rec);
            if let Some(s) = recorder.snapshot(&model, e)? {
                record.snapshots.push(s);
            }
            if divergent {
                record.diverged = true;
                break;
            }
            if stop || last {
                break;
            }
        }
        optimizer.step(&mut model.coeffs, &grad);
    }
    Ok((model, record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::loss::loss_and_gradient;

    fn meta() -> RunMeta {
        RunMeta { config_hash: "p".into(), seed: 0 }
    }

    #[test]
    fn constant_fit_converges_to_mean() {
        let data = Dataset::from_1d(vec![-1.0, 0.0, 2.0], vec![1.0, 2.0, 6.0]).unwrap();
        let (m, r) = polynomial_fit_gd(0, &data, &OptimizerSpec::gd(0.4), &Schedule::every(200, 50), &ProbeSpec::default(), &meta()).unwrap();
        assert!((m.coeffs()[0] - 3.0).abs() < 1e-12);
        assert!(!r.diverged);
        assert!(r.snapshots.iter().all(|s| s.params.as_ref().is_some_and(|p| p.len() == 1)));
    }

    #[test]
    fn line_through_two_points() {
        let data = Dataset::from_1d(vec![-0.5, 1.0], vec![2.0, -1.0]).unwrap();
        let (m, _) = polynomial_fit_gd(1, &data, &OptimizerSpec::gd(0.5), &Schedule::every(2000, 500), &ProbeSpec::default(), &meta()).unwrap();
        assert!((m.coeffs()[1] + 2.0).abs() < 1e-10);
        assert!((m.coeffs()[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gram_gradient_matches_residual_gradient() {
        let xs = vec![-0.9, -0.2, 0.4, 0.8];
        let ys = vec![0.3, -1.0, 2.0, 0.5];
        let data = Dataset::from_1d(xs, ys).unwrap();
        let opt = OptimizerSpec::gd(0.05);
        let (a, _) = polynomial_fit_gd(3, &data, &opt, &Schedule::every(7, 7), &ProbeSpec::default(), &meta()).unwrap();
        let mut b = PolynomialModel::zeros(3);
        for _ in 0..7 {
            let (_, g) = loss_and_gradient(&b, &LossSpec::mse(), &data).unwrap();
            b.coeffs.iter_mut().zip(&g).for_each(|(c, d)| *c -= 0.05 * d);
        }
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn large_step_diverges_and_is_flagged() {
        let xs: Vec<f64> = (0..12).map(|i| -1.0 + 2.0 * i as f64 / 11.0).collect();
        let ys = xs.iter().map(|x| 1.0 / (1.0 + 25.0 * x * x)).collect();
        let data = Dataset::from_1d(xs, ys).unwrap();
        let (_, r) = polynomial_fit_gd(11, &data, &OptimizerSpec::gd(10.0), &Schedule::every(10_000, 1000), &ProbeSpec::default(), &meta()).unwrap();
        assert!(r.diverged);
    }

    #[test]
    fn duplicate_points_rejected() {
        let data = Dataset::from_1d(vec![0.5, 0.5], vec![1.0, 2.0]).unwrap();
        assert!(polynomial_fit_gd(1, &data, &OptimizerSpec::gd(0.1), &Schedule::every(1, 1), &ProbeSpec::default(), &meta()).is_err());
    }
}
