use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex amplitudes indexed by frequency keys, under the `1/n` normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexSpectrum {
    pub keys: Vec<f64>,
    pub amps: Vec<Complex64>,
}

impl ComplexSpectrum {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm()).collect()
    }

    /// Amplitude at `key`, matched to within `1e-9` relative.
    pub fn get(&self, key: f64) -> Option<Complex64> {
        self.position(key).map(|i| self.amps[i])
    }

    fn position(&self, key: f64) -> Option<usize> {
        let tol = 1e-9 * key.abs().max(1.0);
        self.keys.iter().position(|k| (k - key).abs() <= tol)
    }

    /// Keys `0..=n/2` of a full uniform transform; the rest mirror them for real data.
    pub fn one_sided(&self) -> ComplexSpectrum {
        let half = self.len() / 2 + 1;
        ComplexSpectrum { keys: self.keys[..half.min(self.len())].to_vec(), amps: self.amps[..half.min(self.len())].to_vec() }
    }

    pub fn scaled(&self, c: f64) -> ComplexSpectrum {
        ComplexSpectrum { keys: self.keys.clone(), amps: self.amps.iter().map(|a| a * c).collect() }
    }
}

/// `amp_k = (1/n) Σ_i v_i e^{−i2πik/n}` for `k = 0..n−1`, by direct summation.
pub fn dft_uniform(values: &[f64]) -> ComplexSpectrum {
    let bins: Vec<usize> = (0..values.len()).collect();
    dft_bins(values, &bins)
}

/// Selected bins of the uniform transform.
pub fn dft_bins(values: &[f64], bins: &[usize]) -> ComplexSpectrum {
    let n = values.len();
    let inv_n = 1.0 / n.max(1) as f64;
    let amps = bins
        .iter()
        .map(|&k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, &v) in values.iter().enumerate() {
                // reduce the phase index exactly before converting to an angle
                let idx = ((i as u128 * k as u128) % n as u128) as f64;
                let theta = -2.0 * PI * idx / n as f64;
                acc += Complex64::from_polar(v, theta);
            }
            acc * inv_n
        })
        .collect();
    ComplexSpectrum { keys: bins.iter().map(|&k| k as f64).collect(), amps }
}

/// Nonuniform transform of 1-d samples: `ŷ_k = (1/n) Σ y_i e^{−i2πk x_i}`.
pub fn nudft(points: &[f64], values: &[f64], freqs: &[f64]) -> Result<ComplexSpectrum> {
    nudft_along(points, 1, values, &[1.0], freqs)
}

/// Nonuniform transform at vector frequencies `k·p` for scalar keys `k` along direction `p`.
///
/// The direction is used as given (not normalized), so `p = 1_d` probes `k·(1,…,1)`.
pub fn nudft_along(points: &[f64], dim: usize, values: &[f64], direction: &[f64], ks: &[f64]) -> Result<ComplexSpectrum> {
    if values.is_empty() {
        return Err(Error::EmptyInput("nudft needs at least one sample".into()));
    }
    if points.len() != dim * values.len() {
        return Err(Error::DimensionMismatch { expected: dim * values.len(), got: points.len() });
    }
    if direction.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: direction.len() });
    }
    let proj: Vec<f64> = points.chunks(dim).map(|x| x.iter().zip(direction).map(|(a, b)| a * b).sum()).collect();
    let inv_n = 1.0 / values.len() as f64;
    let amps = ks
        .iter()
        .map(|&k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (&p, &y) in proj.iter().zip(values) {
                acc += Complex64::from_polar(y, -2.0 * PI * k * p);
            }
            acc * inv_n
        })
        .collect();
    Ok(ComplexSpectrum { keys: ks.to_vec(), amps })
}

/// Nonuniform transform of 1-d samples at angular frequencies: `(1/n) Σ y_i e^{−iω x_i}`, keyed by `ω`.
pub fn nudft_angular(points: &[f64], values: &[f64], omegas: &[f64]) -> Result<ComplexSpectrum> {
    let freqs: Vec<f64> = omegas.iter().map(|w| w / (2.0 * PI)).collect();
    let mut spec = nudft(points, values, &freqs)?;
    spec.keys = omegas.to_vec();
    Ok(spec)
}

/// Per-key relative spectral errors `Δ_F(k) = |ĥ_k − f̂_k| / |f̂_k|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelErrMap {
    pub keys: Vec<f64>,
    pub values: Vec<f64>,
}

impl RelErrMap {
    pub fn get(&self, key: f64) -> Option<f64> {
        self.keys.iter().position(|k| (k - key).abs() <= 1e-9 * key.abs().max(1.0)).map(|i| self.values[i])
    }
}

pub fn relative_spectral_error(target: &ComplexSpectrum, model: &ComplexSpectrum, keys: &[f64]) -> Result<RelErrMap> {
    let mut values = Vec::with_capacity(keys.len());
    for &k in keys {
        let t = target.get(k).ok_or_else(|| Error::InvalidParameter(format!("key {k} missing from target spectrum")))?;
        let h = model.get(k).ok_or_else(|| Error::InvalidParameter(format!("key {k} missing from model spectrum")))?;
        let denom = t.norm();
        if denom == 0.0 {
            return Err(Error::ZeroTargetAmplitude(k));
        }
        values.push((h - t).norm() / denom);
    }
    Ok(RelErrMap { keys: keys.to_vec(), values })
}

/// The `count` largest local maxima of `|amp|` along the key axis, in ascending key order.
///
/// Keys are taken in the order given. Magnitudes equal to within `1e-12` relative
/// tie, and ties go to the lower frequency.
pub fn select_peaks(spectrum: &ComplexSpectrum, count: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..spectrum.len()).collect();
    order.sort_by(|&a, &b| spectrum.keys[a].total_cmp(&spectrum.keys[b]));
    let mags: Vec<f64> = order.iter().map(|&i| spectrum.amps[i].norm()).collect();
    let m = mags.len();
    let mut peaks: Vec<usize> = (0..m)
        .filter(|&i| (i == 0 || mags[i] >= mags[i - 1]) && (i + 1 == m || mags[i] >= mags[i + 1]))
        .collect();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    peaks.sort_by(|&a, &b| {
        if close(mags[a], mags[b]) {
            a.cmp(&b)
        } else {
            mags[b].total_cmp(&mags[a])
        }
    });
    let mut chosen: Vec<f64> = peaks.into_iter().take(count).map(|i| spectrum.keys[order[i]]).collect();
    chosen.sort_by(f64::total_cmp);
    chosen
}
