use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Fourier transform of `x ↦ tanh(wx + b)` at angular frequency `k`:
/// `(2πi/|w|) e^{ibk/w} / (e^{−πk/2w} − e^{πk/2w})`.
pub fn tanh_unit_spectrum(k: f64, w: f64, b: f64) -> Result<Complex64> {
    if w == 0.0 {
        return Err(Error::InvalidParameter("unit weight must be nonzero".into()));
    }
    if k == 0.0 {
        return Err(Error::InvalidParameter("transform is singular at k = 0".into()));
    }
    let r = PI * k / (2.0 * w);
    // e^{−r} − e^{r} = −2 sinh r, which stays finite longer than the separate exponentials
    let denom = -2.0 * r.sinh();
    let phase = Complex64::from_polar(1.0, b * k / w);
    Ok(Complex64::new(0.0, 2.0 * PI / w.abs()) * phase / denom)
}

/// Magnitude of the loss-gradient contribution from frequency `k`: `A·exp(−|πk/2w|)`.
pub fn gradient_contribution(w: f64, k: f64, amplitude: f64) -> Result<f64> {
    if w == 0.0 {
        return Err(Error::InvalidParameter("unit weight must be nonzero".into()));
    }
    if !(amplitude >= 0.0) {
        return Err(Error::InvalidParameter(format!("amplitude must be nonnegative, got {amplitude}")));
    }
    Ok(amplitude * (-(PI * k / (2.0 * w)).abs()).exp())
}
