use serde::{Deserialize, Serialize};

use super::gram::GramKernel;
use crate::error::{Error, Result};

/// Residuals `u_t` for `t = 0..=T` and their eigenbasis coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualFlow {
    pub residuals: Vec<Vec<f64>>,
    /// `mode_coeffs[t][k] = v_kᵀ u_t`.
    pub mode_coeffs: Vec<Vec<f64>>,
}

/// Discrete kernel flow `u_{t+1} = (I − ηK) u_t`.
pub fn residual_flow(gram: &GramKernel, u0: &[f64], eta: f64, steps: usize) -> Result<ResidualFlow> {
    let n = gram.len();
    if u0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u0.len() });
    }
    let top = gram.eigen.values[0];
    if !(eta > 0.0) || eta * top >= 2.0 {
        return Err(Error::Unstable(format!("step {eta} with top eigenvalue {top} violates η·λ₁ < 2")));
    }
    let mut residuals = Vec::with_capacity(steps + 1);
    let mut mode_coeffs = Vec::with_capacity(steps + 1);
    let mut u = u0.to_vec();
    for t in 0..=steps {
        mode_coeffs.push(gram.eigen.coefficients(&u));
        residuals.push(u.clone());
        if t == steps {
            break;
        }
        let ku = gram.apply(&u);
        u.iter_mut().zip(&ku).for_each(|(a, b)| *a -= eta * b);
    }
    Ok(ResidualFlow { residuals, mode_coeffs })
}

/// Sign changes of `v` along the points sorted by `coords`, skipping entries below `1e-12` in magnitude.
pub fn eigvec_zero_crossings(v: &[f64], coords: &[f64]) -> Result<usize> {
    if v.len() != coords.len() {
        return Err(Error::DimensionMismatch { expected: coords.len(), got: v.len() });
    }
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| coords[a].total_cmp(&coords[b]));
    let mut count = 0;
    let mut prev: Option<bool> = None;
    for i in idx {
        if v[i].abs() < 1e-12 {
            continue;
        }
        let pos = v[i] > 0.0;
        if prev.is_some_and(|p| p != pos) {
            count += 1;
        }
        prev = Some(pos);
    }
    Ok(count)
}

/// Bound value with a flag telling whether `1e-10·I` had to be added to invert the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    pub regularized: bool,
}

/// `sqrt(2 Yᵀ K⁻¹ Y / n)`, evaluated in the eigenbasis of `K`.
pub fn ntk_generalization_bound(gram: &GramKernel, y: &[f64]) -> Result<BoundValue> {
    let n = gram.len();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    let top = gram.eigen.values[0].abs();
    let regularized = gram.eigen.values.iter().any(|&l| l <= 1e-14 * top.max(f64::MIN_POSITIVE));
    let shift = if regularized { 1e-10 } else { 0.0 };
    let coeffs = gram.eigen.coefficients(y);
    let quad: f64 = coeffs.iter().zip(&gram.eigen.values).map(|(c, l)| c * c / (l.max(0.0) + shift)).sum();
    Ok(BoundValue { value: (2.0 * quad / n as f64).sqrt(), regularized })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(values: &[f64]) -> GramKernel {
        let n = values.len();
        let mut m = vec![0.0; n * n];
        for (i, v) in values.iter().enumerate() {
            m[i * n + i] = *v;
        }
        GramKernel::from_matrix((0..n).map(|i| i as f64).collect(), 1, m).unwrap()
    }

    #[test]
    fn eigenvector_decays_geometrically() {
        let g = diag(&[3.0, 1.0, 0.5]);
        let flow = residual_flow(&g, &[0.0, 1.0, 0.0], 0.2, 10).unwrap();
        for (t, u) in flow.residuals.iter().enumerate() {
            assert!((u[1] - 0.8f64.powi(t as i32)).abs() < 1e-14);
        }
        assert!(residual_flow(&g, &[1.0, 0.0, 0.0], 0.7, 1).is_err());
    }

    #[test]
    fn crossings_examples() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(eigvec_zero_crossings(&[1.0, 2.0, 0.5, 3.0, 1.0], &xs).unwrap(), 0);
        assert_eq!(eigvec_zero_crossings(&[1.0, -1.0, 1.0, -1.0, 1.0], &xs).unwrap(), 4);
        assert_eq!(eigvec_zero_crossings(&[1.0, 0.0, 1.0, -1e-13, 1.0], &xs).unwrap(), 0);
        // order follows coordinates, not storage
        assert_eq!(eigvec_zero_crossings(&[1.0, 1.0, -1.0], &[0.0, 2.0, 1.0]).unwrap(), 2);
    }

    #[test]
    fn bound_examples() {
        let g = diag(&[1.0, 1.0, 1.0, 1.0]);
        let y = [1.0, -2.0, 0.5, 0.0];
        let b = ntk_generalization_bound(&g, &y).unwrap();
        assert!((b.value - (2.0 * 5.25 / 4.0f64).sqrt()).abs() < 1e-14);
        assert!(!b.regularized);
        assert_eq!(ntk_generalization_bound(&g, &[0.0; 4]).unwrap().value, 0.0);
        let h = diag(&[4.0, 0.25]);
        let hi = ntk_generalization_bound(&h, &[1.0, 0.0]).unwrap().value;
        let lo = ntk_generalization_bound(&h, &[0.0, 1.0]).unwrap().value;
        assert!(lo > hi);
        assert!(ntk_generalization_bound(&diag(&[1.0, 0.0]), &[1.0, 1.0]).unwrap().regularized);
    }
}
