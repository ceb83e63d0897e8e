//! Linear frequency-domain dynamics of wide two-layer ReLU networks and their long-time limit.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freq::spectrum::ComplexSpectrum;

/// Rate `γ(ξ)² = C1/‖ξ‖^{d+3} + C2/‖ξ‖^{d+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaSpec {
    pub c1: f64,
    pub c2: f64,
    pub d: usize,
}

impl GammaSpec {
    pub fn new(c1: f64, c2: f64, d: usize) -> Result<Self> {
        let g = Self { c1, c2, d };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 >= 0.0 && self.c2 >= 0.0) || (self.c1 == 0.0 && self.c2 == 0.0) {
            return Err(Error::InvalidParameter(format!("need C1, C2 ≥ 0 and not both zero, got {}, {}", self.c1, self.c2)));
        }
        if self.d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Ok(())
    }

    /// `γ²` at frequency magnitude `r > 0`.
    pub fn rate(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("rate is singular at |ξ| = {r}")));
        }
        let d = self.d as i32;
        Ok(self.c1 / r.powi(d + 3) + self.c2 / r.powi(d + 1))
    }
}

/// `γ(ξ)²` for a frequency vector `ξ` in dimension `d`.
pub fn lfp_rate(xi: &[f64], c1: f64, c2: f64, d: usize) -> Result<f64> {
    if xi.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: xi.len() });
    }
    GammaSpec::new(c1, c2, d)?.rate(xi.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// Frequency grid for 1-d quadrature of `∫ γ² e^{i2πξr} dξ`.
///
/// The point `ξ = 0` carries the weight of the smallest nonzero grid frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FreqGrid {
    /// `ξ_j = jΔξ` for `|ξ_j| ≤ cutoff`.
    Truncated { spacing: f64, cutoff: f64 },
    /// The same lattice without a cutoff, summed in closed form.
    Untruncated { spacing: f64 },
}

impl FreqGrid {
    /// `Δξ = 1/(4·span)`, cutoff `32/span`.
    pub fn default_for_span(span: f64) -> Self {
        FreqGrid::Truncated { spacing: 1.0 / (4.0 * span), cutoff: 32.0 / span }
    }

    pub fn spacing(&self) -> f64 {
        match *self {
            FreqGrid::Truncated { spacing, .. } | FreqGrid::Untruncated { spacing } => spacing,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            FreqGrid::Truncated { spacing, cutoff } => spacing > 0.0 && cutoff >= spacing && spacing.is_finite() && cutoff.is_finite(),
            FreqGrid::Untruncated { spacing } => spacing > 0.0 && spacing.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("bad frequency grid {self:?}")))
        }
    }

    /// Symmetric grid frequencies in ascending order (truncated grids only).
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        match *self {
            FreqGrid::Truncated { spacing, cutoff } => {
                let m = (cutoff / spacing + 1e-9).floor() as i64;
                Ok((-m..=m).map(|j| j as f64 * spacing).collect())
            }
            FreqGrid::Untruncated { .. } => Err(Error::InvalidParameter("an untruncated grid has no finite frequency list".into())),
        }
    }
}

/// `γ²` on a 1-d grid, with the `ξ = 0` value taken from the smallest nonzero frequency.
fn grid_rate(gamma: &GammaSpec, xi: f64, spacing: f64) -> f64 {
    let r = if xi.abs() < 0.5 * spacing { spacing } else { xi.abs() };
    gamma.rate(r).expect("positive frequency")
}

/// `Σ_{j≥1} cos(2πjt)/j²` and `Σ_{j≥1} cos(2πjt)/j⁴` via Bernoulli polynomials.
fn lattice_sums(t: f64) -> (f64, f64) {
    let t = t.rem_euclid(1.0);
    let b2 = t * t - t + 1.0 / 6.0;
    let b4 = t * t * t * t - 2.0 * t * t * t + t * t - 1.0 / 30.0;
    (PI * PI * b2, -(2.0 * PI).powi(4) * b4 / 48.0)
}

/// Quadrature kernel `k(r) = Δξ Σ_ξ γ(ξ)² cos(2πξr)` of the LFP operator in 1-d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LfpKernel {
    pub gamma: GammaSpec,
    pub grid: FreqGrid,
}

impl LfpKernel {
    pub fn new(gamma: GammaSpec, grid: FreqGrid) -> Result<Self> {
        gamma.validate()?;
        grid.validate()?;
        if gamma.d != 1 {
            return Err(Error::InvalidParameter("the quadrature kernel is implemented for d = 1".into()));
        }
        Ok(Self { gamma, grid })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self.grid {
            FreqGrid::Truncated { spacing, .. } => {
                let freqs = self.grid.frequencies().expect("truncated");
                spacing * freqs.iter().map(|&xi| grid_rate(&self.gamma, xi, spacing) * (2.0 * PI * xi * r).cos()).sum::<f64>()
            }
            FreqGrid::Untruncated { spacing } => {
                // γ²(jΔξ) = C1 (jΔξ)^{-4} + C2 (jΔξ)^{-2}; the j = 0 term reuses j = 1
                let (s2, s4) = lattice_sums(spacing * r);
                let k4 = spacing.powi(-3) * (1.0 + 2.0 * s4);
                let k2 = spacing.powi(-1) * (1.0 + 2.0 * s2);
                self.gamma.c1 * k4 + self.gamma.c2 * k2
            }
        }
    }

    /// `n_a × n_b` matrix `k(a_i − b_j)`, row-major.
    pub fn matrix(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(a.len() * b.len());
        if let FreqGrid::Truncated { spacing, .. } = self.grid {
            let freqs = self.grid.frequencies().expect("truncated");
            let table: Vec<(f64, f64)> = freqs.iter().map(|&xi| (2.0 * PI * xi, spacing * grid_rate(&self.gamma, xi, spacing))).collect();
            for &x in a {
                for &y in b {
                    out.push(table.iter().map(|(w, c)| c * (w * (x - y)).cos()).sum());
                }
            }
            return out;
        }
        for &x in a {
            for &y in b {
                out.push(self.eval(x - y));
            }
        }
        out
    }
}

/// LFP dynamics on a set of 1-d data points with weights `1/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LfpModel {
    pub gamma: GammaSpec,
    pub grid: FreqGrid,
    pub points: Vec<f64>,
}

/// Output of [`lfp_evolve`]: displacement spectra `Δû` on the grid and residuals at the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LfpTrajectory {
    pub frequencies: Vec<f64>,
    pub times: Vec<f64>,
    /// Change of the residual spectrum since `t = 0`, one row per recorded time.
    pub spectra: Vec<Vec<Complex64>>,
    pub residuals: Vec<Vec<f64>>,
    /// Set when the residual grew by more than `1e6` and stepping stopped.
    pub unstable: bool,
}

impl LfpTrajectory {
    /// Displacement `Σ_j Δû_j e^{i2πξ_j x} Δξ` (real part) at `xs` for recorded row `row`.
    pub fn displacement_at(&self, row: usize, xs: &[f64]) -> Vec<f64> {
        let dxi = if self.frequencies.len() > 1 { self.frequencies[1] - self.frequencies[0] } else { 1.0 };
        xs.iter()
            .map(|&x| {
                self.frequencies
                    .iter()
                    .zip(&self.spectra[row])
                    .map(|(&xi, a)| (a * Complex64::from_polar(1.0, 2.0 * PI * xi * x)).re)
                    .sum::<f64>()
                    * dxi
            })
            .collect()
    }

    pub fn spectrum(&self, row: usize) -> ComplexSpectrum {
        ComplexSpectrum { keys: self.frequencies.clone(), amps: self.spectra[row].clone() }
    }
}

/// Explicit Euler stepping of `∂_t û(ξ) = −γ(ξ)² (1/n) Σ_i u(x_i) e^{−i2πξx_i}` on a truncated grid.
///
/// The residual at the data is `u_0(x_i)` plus the inverse transform of the accumulated
/// change `Δû`; rows are recorded every `record_every` steps and at the end.
pub fn lfp_evolve(model: &LfpModel, u0: &[f64], dt: f64, steps: usize, record_every: usize) -> Result<LfpTrajectory> {
    model.gamma.validate()?;
    model.grid.validate()?;
    if model.gamma.d != 1 {
        return Err(Error::InvalidParameter("lfp_evolve is implemented for d = 1".into()));
    }
    if u0.len() != model.points.len() || u0.is_empty() {
        return Err(Error::DimensionMismatch { expected: model.points.len(), got: u0.len() });
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    let freqs = model.grid.frequencies()?;
    let spacing = model.grid.spacing();
    let n = u0.len();
    let g = freqs.len();
    let rates: Vec<f64> = freqs.iter().map(|&xi| grid_rate(&model.gamma, xi, spacing)).collect();
    // phase[j*n + i] = e^{−i2πξ_j x_i}
    let phase: Vec<Complex64> =
        freqs.iter().flat_map(|&xi| model.points.iter().map(move |&x| Complex64::from_polar(1.0, -2.0 * PI * xi * x))).collect();
    let scale0 = u0.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);

    let mut du = vec![Complex64::new(0.0, 0.0); g];
    let mut u = u0.to_vec();
    let mut traj = LfpTrajectory { frequencies: freqs, times: Vec::new(), spectra: Vec::new(), residuals: Vec::new(), unstable: false };
    let every = record_every.max(1);
    for s in 0..=steps {
        if s % every == 0 || s == steps {
            traj.times.push(s as f64 * dt);
            traj.spectra.push(du.clone());
            traj.residuals.push(u.clone());
        }
        if s == steps {
            break;
        }
        for j in 0..g {
            let row = &phase[j * n..(j + 1) * n];
            let proj: Complex64 = row.iter().zip(&u).map(|(p, v)| p * v).sum::<Complex64>() / n as f64;
            du[j] -= dt * rates[j] * proj;
        }
        for (i, ui) in u.iter_mut().enumerate() {
            let back: f64 = (0..g).map(|j| (du[j] * phase[j * n + i].conj()).re).sum();
            *ui = u0[i] + back * spacing;
        }
        if u.iter().any(|v| !v.is_finite() || v.abs() > 1e6 * scale0) {
            traj.unstable = true;
            traj.times.push((s + 1) as f64 * dt);
            traj.spectra.push(du.clone());
            traj.residuals.push(u.clone());
            break;
        }
    }
    Ok(traj)
}

/// Minimizer of `Σ γ^{-2}|ĥ − ĥ_ini|²` subject to `h(x_i) = y_i`, evaluated at `eval`.
///
/// Stationarity gives `h = h_ini + Σ_i α_i k(· − x_i)` with `K α = y − h_ini(x)`,
/// where `k` is the quadrature kernel of [`LfpKernel`].
pub fn lfp_equilibrium(
    xs: &[f64],
    ys: &[f64],
    kernel: &LfpKernel,
    h_ini: &dyn Fn(f64) -> f64,
    eval: &[f64],
) -> Result<Vec<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: ys.len() });
    }
    if xs.is_empty() {
        return Err(Error::EmptyInput("equilibrium needs at least one data point".into()));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Singular("duplicate data points".into()));
    }
    let n = xs.len();
    let k = DMatrix::from_row_slice(n, n, &kernel.matrix(xs, xs));
    let rhs = DVector::from_iterator(n, xs.iter().zip(ys).map(|(&x, &y)| y - h_ini(x)));
    let lu = k.clone().lu();
    let mut alpha = lu.solve(&rhs).ok_or_else(|| Error::Singular("interpolation system".into()))?;
    // iterative refinement against the badly scaled kernel
    for _ in 0..3 {
        let r = &rhs - &k * &alpha;
        if let Some(c) = lu.solve(&r) {
            alpha += c;
        }
    }
    if alpha.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("interpolation system".into()));
    }
    let ke = kernel.matrix(eval, xs);
    Ok(eval
        .iter()
        .enumerate()
        .map(|(i, &x)| h_ini(x) + ke[i * n..(i + 1) * n].iter().zip(alpha.iter()).map(|(a, b)| a * b).sum::<f64>())
        .collect())
}

/// `Σ_k γ(ξ_k)^{-2} |ĥ_k|² w`, with `w` the key spacing (1 for a single key).
///
/// A zero key contributes with the rate of the smallest nonzero key magnitude.
pub fn fp_energy(spectrum: &ComplexSpectrum, gamma: &GammaSpec) -> Result<f64> {
    gamma.validate()?;
    if spectrum.is_empty() {
        return Ok(0.0);
    }
    let smallest = spectrum.keys.iter().map(|k| k.abs()).filter(|k| *k > 0.0).fold(f64::INFINITY, f64::min);
    let w = if spectrum.len() > 1 { (spectrum.keys[1] - spectrum.keys[0]).abs() } else { 1.0 };
    let mut e = 0.0;
    for (k, a) in spectrum.keys.iter().zip(&spectrum.amps) {
        let r = if *k == 0.0 { smallest } else { k.abs() };
        if !r.is_finite() {
            return Err(Error::InvalidParameter("rate undefined on an all-zero key set".into()));
        }
        e += a.norm_sqr() / gamma.rate(r)?;
    }
    Ok(e * w)
}

/// `(E_γ(f*)/√n)·C_γ·(2 + 4√(2 log(4/δ)))`.
pub fn lfp_generalization_bound(target: &ComplexSpectrum, gamma: &GammaSpec, n: usize, delta: f64, c_gamma: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("confidence level must lie in (0,1), got {delta}")));
    }
    let energy = fp_energy(target, gamma)?;
    Ok(energy / (n as f64).sqrt() * c_gamma * (2.0 + 4.0 * (2.0 * (4.0 / delta).ln()).sqrt()))
}

/// Nonnegative least-squares fit of `(C1, C2)` to measured rates `r_k ≈ C1/ξ_k^{d+3} + C2/ξ_k^{d+1}`.
pub fn fit_rate_constants(xis: &[f64], rates: &[f64], weights: &[f64], d: usize) -> Result<GammaSpec> {
    if xis.len() != rates.len() || xis.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: xis.len(), got: rates.len().min(weights.len()) });
    }
    if xis.iter().any(|x| !(x.abs() > 0.0)) {
        return Err(Error::InvalidParameter("rate fit needs nonzero frequencies".into()));
    }
    let di = d as i32;
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((x, r), w) in xis.iter().zip(rates).zip(weights) {
        let (p, q) = (x.abs().powi(-(di + 3)), x.abs().powi(-(di + 1)));
        a11 += w * p * p;
        a12 += w * p * q;
        a22 += w * q * q;
        b1 += w * p * r;
        b2 += w * q * r;
    }
    let sse = |c1: f64, c2: f64| -> f64 {
        xis.iter().zip(rates).zip(weights).map(|((x, r), w)| {
            let e = c1 * x.abs().powi(-(di + 3)) + c2 * x.abs().powi(-(di + 1)) - r;
            w * e * e
        }).sum()
    };
    let mut candidates = Vec::new();
    let det = a11 * a22 - a12 * a12;
    if det.abs() > 1e-300 {
        let c1 = (b1 * a22 - b2 * a12) / det;
        let c2 = (a11 * b2 - a12 * b1) / det;
        if c1 >= 0.0 && c2 >= 0.0 {
            candidates.push((c1, c2));
        }
    }
    if a11 > 0.0 {
        candidates.push(((b1 / a11).max(0.0), 0.0));
    }
    if a22 > 0.0 {
        candidates.push((0.0, (b2 / a22).max(0.0)));
    }
    let best = candidates
        .into_iter()
        .filter(|(c1, c2)| *c1 > 0.0 || *c2 > 0.0)
        .min_by(|a, b| sse(a.0, a.1).total_cmp(&sse(b.0, b.1)))
        .ok_or_else(|| Error::Degenerate("no positive rate constants fit the data".into()))?;
    GammaSpec::new(best.0, best.1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_examples() {
        assert_eq!(lfp_rate(&[1.0], 1.0, 1.0, 1).unwrap(), 2.0);
        assert!(lfp_rate(&[0.0], 1.0, 1.0, 1).is_err());
        let r1 = lfp_rate(&[0.7], 0.0, 2.0, 1).unwrap();
        let r2 = lfp_rate(&[1.4], 0.0, 2.0, 1).unwrap();
        assert!((r2 / r1 - 0.25).abs() < 1e-14);
        let a = lfp_rate(&[0.3, 0.4], 1.0, 0.5, 2).unwrap();
        assert!((a - (1.0 / 0.5f64.powi(5) + 0.5 / 0.5f64.powi(3))).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_long_truncated_sum() {
        let gamma = GammaSpec::new(0.3, 1.1, 1).unwrap();
        let spacing = 0.125;
        let exact = LfpKernel::new(gamma, FreqGrid::Untruncated { spacing }).unwrap();
        let approx = LfpKernel::new(gamma, FreqGrid::Truncated { spacing, cutoff: 20000.0 * spacing }).unwrap();
        for r in [0.0, 0.37, 1.9, -2.4] {
            let (a, b) = (exact.eval(r), approx.eval(r));
            assert!((a - b).abs() < 1e-3 * a.abs(), "{r}: {a} vs {b}");
        }
    }

    #[test]
    fn single_point_equilibrium_interpolates() {
        let kernel = LfpKernel::new(GammaSpec::new(0.0, 1.0, 1).unwrap(), FreqGrid::default_for_span(1.0)).unwrap();
        let h = lfp_equilibrium(&[0.2], &[1.5], &kernel, &|_| 0.0, &[0.2, 0.5]).unwrap();
        assert!((h[0] - 1.5).abs() < 1e-12);
        assert!(lfp_equilibrium(&[0.2, 0.2], &[1.0, 1.0], &kernel, &|_| 0.0, &[0.0]).is_err());
    }

    #[test]
    fn zero_residual_freezes_spectrum() {
        let model = LfpModel { gamma: GammaSpec::new(1.0, 1.0, 1).unwrap(), grid: FreqGrid::default_for_span(2.0), points: vec![-0.5, 0.1, 0.7] };
        let t = lfp_evolve(&model, &[0.0; 3], 1e-3, 20, 5).unwrap();
        assert!(t.spectra.iter().flatten().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn energy_examples() {
        let gamma = GammaSpec::new(0.0, 1.0, 1).unwrap();
        let keys = vec![-2.0, -1.0, 0.0, 1.0, 2.0];
        let zero = ComplexSpectrum { keys: keys.clone(), amps: vec![Complex64::new(0.0, 0.0); 5] };
        assert_eq!(fp_energy(&zero, &gamma).unwrap(), 0.0);
        let spike = |i: usize, a: f64| {
            let mut amps = vec![Complex64::new(0.0, 0.0); 5];
            amps[i] = Complex64::new(a, 0.0);
            ComplexSpectrum { keys: keys.clone(), amps }
        };
        assert!(fp_energy(&spike(4, 1.0), &gamma).unwrap() > fp_energy(&spike(3, 1.0), &gamma).unwrap());
        let e1 = fp_energy(&spike(1, 1.0), &gamma).unwrap();
        assert!((fp_energy(&spike(1, 2.0), &gamma).unwrap() - 4.0 * e1).abs() < 1e-14);
    }

    #[test]
    fn bound_examples() {
        let gamma = GammaSpec::new(0.0, 1.0, 1).unwrap();
        let keys = vec![1.0, 2.0, 3.0];
        let low = ComplexSpectrum { keys: keys.clone(), amps: vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)] };
        let high = ComplexSpectrum { keys: keys.clone(), amps: vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)] };
        let b = |s: &ComplexSpectrum, n| lfp_generalization_bound(s, &gamma, n, 0.05, 1.0).unwrap();
        assert!((b(&low, 100) / b(&low, 400) - 2.0).abs() < 1e-12);
        assert!(b(&high, 10) > b(&low, 10));
        assert!(lfp_generalization_bound(&low, &gamma, 10, 1.0, 1.0).is_err());
    }

    #[test]
    fn rate_fit_recovers_constants() {
        let xis: Vec<f64> = (1..20).map(|j| 0.25 * j as f64).collect();
        let rates: Vec<f64> = xis.iter().map(|x| 0.4 / x.powi(4) + 1.5 / x.powi(2)).collect();
        let g = fit_rate_constants(&xis, &rates, &vec![1.0; xis.len()], 1).unwrap();
        assert!((g.c1 - 0.4).abs() < 1e-9 && (g.c2 - 1.5).abs() < 1e-9);
    }
}
