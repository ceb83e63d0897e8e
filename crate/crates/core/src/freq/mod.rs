//! Frequency diagnostics on uniform and scattered samples.

pub mod activation_spectrum;
pub mod filter;
pub mod projection;
pub mod spectrum;

pub use num_complex::Complex64;
pub use activation_spectrum::{gradient_contribution, tanh_unit_spectrum};
pub use filter::{filtered_errors, gaussian_split, FilterSplit, FilteredErrors, GaussianFilter};
pub use projection::{default_probe_grid, normalize_sign, principal_direction, project_dataset, Projection};
pub use spectrum::{dft_bins, dft_uniform, nudft, nudft_along, nudft_angular, relative_spectral_error, select_peaks, ComplexSpectrum, RelErrMap};
