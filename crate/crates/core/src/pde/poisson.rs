use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `−u'' = g` on `(−1, 1)` with zero Dirichlet data, discretized on `n` intervals.
///
/// Unknowns live at the interior nodes `x_i = −1 + i·h`, `i = 1..n−1`, `h = 2/n`.
/// The matrix is `A = tridiag(−1, 2, −1)/h²` and `rhs[i] = g(x_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonSystem {
    pub n: usize,
    pub h: f64,
    pub nodes: Vec<f64>,
    pub rhs: Vec<f64>,
}

/// `w_{k,i} = sin(ikπ/n)` for `i = 1..n−1`.
pub fn sine_mode(n: usize, k: usize) -> Vec<f64> {
    let step = k as f64 * std::f64::consts::PI / n as f64;
    (1..n).map(|i| (i as f64 * step).sin()).collect()
}

/// Eigenvalue of `A` on mode `k`: `(4/h²) sin²(kπ/2n)`.
pub fn sine_eigenvalue(n: usize, k: usize) -> f64 {
    let h = 2.0 / n as f64;
    let s = (k as f64 * std::f64::consts::PI / (2.0 * n as f64)).sin();
    4.0 * s * s / (h * h)
}

pub fn assemble_poisson_1d(n: usize, g: impl Fn(f64) -> f64) -> Result<PoissonSystem> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("grid needs at least 3 intervals, got {n}")));
    }
    let h = 2.0 / n as f64;
    let nodes: Vec<f64> = (1..n).map(|i| -1.0 + i as f64 * h).collect();
    let rhs = nodes.iter().map(|&x| g(x)).collect();
    let sys = PoissonSystem { n, h, nodes, rhs };
    sys.check_sine_modes()?;
    Ok(sys)
}

impl PoissonSystem {
    pub fn size(&self) -> usize {
        self.n - 1
    }

    pub fn diagonal(&self) -> f64 {
        2.0 / (self.h * self.h)
    }

    pub fn off_diagonal(&self) -> f64 {
        -1.0 / (self.h * self.h)
    }

    /// Dense row-major copy of `A`.
    pub fn dense(&self) -> Vec<f64> {
        let m = self.size();
        let mut a = vec![0.0; m * m];
        for i in 0..m {
            a[i * m + i] = self.diagonal();
            if i > 0 {
                a[i * m + i - 1] = self.off_diagonal();
            }
            if i + 1 < m {
                a[i * m + i + 1] = self.off_diagonal();
            }
        }
        a
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let m = self.size();
        let inv = 1.0 / (self.h * self.h);
        (0..m)
            .map(|i| {
                let l = if i > 0 { u[i - 1] } else { 0.0 };
                let r = if i + 1 < m { u[i + 1] } else { 0.0 };
                (2.0 * u[i] - l - r) * inv
            })
            .collect()
    }

    /// Right-hand side of the unscaled stencil `tridiag(−1, 2, −1)·u = h²g`.
    pub fn scaled_rhs(&self) -> Vec<f64> {
        let h2 = self.h * self.h;
        self.rhs.iter().map(|g| g * h2).collect()
    }

    /// Max-norm of `h²(Au − g)`, the residual of the unscaled stencil.
    pub fn stencil_residual(&self, u: &[f64]) -> f64 {
        let h2 = self.h * self.h;
        self.apply(u).iter().zip(&self.rhs).fold(0.0f64, |m, (a, g)| m.max((h2 * (a - g)).abs()))
    }

    /// Thomas elimination on the unscaled stencil.
    pub fn solve_direct(&self) -> Vec<f64> {
        let m = self.size();
        let d = self.scaled_rhs();
        let mut c = vec![0.0; m];
        let mut y = vec![0.0; m];
        let mut denom = 2.0;
        c[0] = -1.0 / denom;
        y[0] = d[0] / denom;
        for i in 1..m {
            denom = 2.0 + c[i - 1];
            c[i] = -1.0 / denom;
            y[i] = (d[i] + y[i - 1]) / denom;
        }
        for i in (0..m - 1).rev() {
            y[i] -= c[i] * y[i + 1];
        }
        y
    }

    /// One Jacobi sweep `u ← D⁻¹((L+U)u + g)`.
    pub fn jacobi_step(&self, u: &[f64], out: &mut [f64]) {
        let m = self.size();
        let h2 = self.h * self.h;
        for i in 0..m {
            let l = if i > 0 { u[i - 1] } else { 0.0 };
            let r = if i + 1 < m { u[i + 1] } else { 0.0 };
            out[i] = 0.5 * (l + r + h2 * self.rhs[i]);
        }
    }

    fn check_sine_modes(&self) -> Result<()> {
        for k in 1..self.n {
            let w = sine_mode(self.n, k);
            let aw = self.apply(&w);
            let ww: f64 = w.iter().map(|v| v * v).sum();
            let rq = aw.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / ww;
            let lam = sine_eigenvalue(self.n, k);
            let res = aw.iter().zip(&w).fold(0.0f64, |m, (a, b)| m.max((a - rq * b).abs()));
            if (rq - lam).abs() > 1e-8 * lam.max(1.0) || res > 1e-8 * self.diagonal() {
                return Err(Error::Degenerate(format!("sine mode {k} is not an eigenvector of the stencil")));
            }
        }
        Ok(())
    }
}

/// `u_ref(x) = Σ (c/ω²) sin(ωx) + a + bx` with `u(±1) = 0`, solving `−u'' = Σ c sin(ωx)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonReference {
    /// `(c, ω)` pairs.
    pub terms: Vec<(f64, f64)>,
    pub a: f64,
    pub b: f64,
}

pub fn poisson_reference(terms: &[(f64, f64)]) -> Result<PoissonReference> {
    if let Some((_, w)) = terms.iter().find(|(_, w)| *w == 0.0 || !w.is_finite()) {
        return Err(Error::InvalidParameter(format!("sine frequency must be nonzero and finite, got {w}")));
    }
    let series = |x: f64| terms.iter().map(|(c, w)| c / (w * w) * (w * x).sin()).sum::<f64>();
    let (s_lo, s_hi) = (series(-1.0), series(1.0));
    Ok(PoissonReference { terms: terms.to_vec(), a: -(s_hi + s_lo) / 2.0, b: -(s_hi - s_lo) / 2.0 })
}

impl PoissonReference {
    /// The source term `g(x) = sin x + 4 sin 4x − 8 sin 8x + 16 sin 24x`.
    pub fn default_terms() -> Vec<(f64, f64)> {
        vec![(1.0, 1.0), (4.0, 4.0), (-8.0, 8.0), (16.0, 24.0)]
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.a + self.b * x + self.terms.iter().map(|(c, w)| c / (w * w) * (w * x).sin()).sum::<f64>()
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        -self.source(x)
    }

    pub fn source(&self, x: f64) -> f64 {
        self.terms.iter().map(|(c, w)| c * (w * x).sin()).sum()
    }

    /// Sine frequencies of the source, ascending.
    pub fn frequencies(&self) -> Vec<f64> {
        let mut w: Vec<f64> = self.terms.iter().map(|t| t.1.abs()).collect();
        w.sort_by(f64::total_cmp);
        w.dedup();
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_stencil() {
        let s = assemble_poisson_1d(4, |_| 0.0).unwrap();
        assert_eq!(s.size(), 3);
        let h2 = 0.25;
        assert_eq!(s.dense(), vec![2.0 / h2, -1.0 / h2, 0.0, -1.0 / h2, 2.0 / h2, -1.0 / h2, 0.0, -1.0 / h2, 2.0 / h2]);
        assert!(s.solve_direct().iter().all(|v| *v == 0.0));
        assert!(assemble_poisson_1d(2, |_| 0.0).is_err());
    }

    #[test]
    fn direct_solve_satisfies_stencil() {
        let s = assemble_poisson_1d(257, |x| (3.0 * x).exp() - x * x).unwrap();
        let u = s.solve_direct();
        assert!(s.stencil_residual(&u) < 1e-10);
    }

    #[test]
    fn reference_examples() {
        let zero = poisson_reference(&[]).unwrap();
        assert_eq!(zero.eval(0.3), 0.0);
        let r = poisson_reference(&[(1.0, 1.0)]).unwrap();
        for x in [-1.0, 1.0] {
            assert!(r.eval(x).abs() < 1e-15);
        }
        for x in [-0.7, 0.1, 0.9] {
            assert!((-r.second_derivative(x) - x.sin()).abs() < 1e-15);
            assert!((r.eval(x) - (x.sin() - x * 1f64.sin())).abs() < 1e-15);
        }
        assert!(poisson_reference(&[(1.0, 0.0)]).is_err());
    }
}
