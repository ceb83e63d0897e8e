//! Target generators.

use std::path::{Path, PathBuf};

use fplab_core::pde::{poisson_reference, PoissonReference};
use fplab_io::{image_dataset, load_grayscale_image, load_idx, GrayImage, LabeledDataset, Normalization};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ExpError, ExpResult};

fn neg_pi() -> f64 {
    -3.14
}
fn pos_pi() -> f64 {
    3.14
}
fn neg_one() -> f64 {
    -1.0
}
fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    /// `sin(x) + sin(3x) + sin(5x)`.
    ThreeSine {
        #[serde(default = "neg_pi")]
        lo: f64,
        #[serde(default = "pos_pi")]
        hi: f64,
    },
    /// `sin(x) + sin(5x)`.
    TwoSine {
        #[serde(default = "neg_pi")]
        lo: f64,
        #[serde(default = "pos_pi")]
        hi: f64,
    },
    /// `sin(x) + sin(20x)`.
    TwoTone {
        #[serde(default = "neg_pi")]
        lo: f64,
        #[serde(default = "pos_pi")]
        hi: f64,
    },
    /// `Π x_j` on `{−1, 1}^d`.
    Parity { d: usize },
    /// `sin(x/2)` plus `normal(0, sigma²)` noise.
    NoisyLowfreq { lo: f64, hi: f64, sigma: f64 },
    /// `1/(1 + 25x²)`.
    RungePoly {
        #[serde(default = "neg_one")]
        lo: f64,
        #[serde(default = "one")]
        hi: f64,
    },
    /// Source term of the reference Poisson problem on `(−1, 1)`.
    PoissonG,
    /// Grayscale image; the built-in synthetic picture when no path is given.
    Image {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
        #[serde(default = "synthetic_size")]
        size: usize,
    },
    IdxDataset { images: PathBuf, labels: PathBuf, subset: Vec<u8> },
}

fn synthetic_size() -> usize {
    64
}

impl TargetSpec {
    /// Clean 1-d target value, for the analytic targets.
    pub fn clean(&self, x: f64) -> Option<f64> {
        match self {
            TargetSpec::ThreeSine { .. } => Some(x.sin() + (3.0 * x).sin() + (5.0 * x).sin()),
            TargetSpec::TwoSine { .. } => Some(x.sin() + (5.0 * x).sin()),
            TargetSpec::TwoTone { .. } => Some(x.sin() + (20.0 * x).sin()),
            TargetSpec::NoisyLowfreq { .. } => Some((0.5 * x).sin()),
            TargetSpec::RungePoly { .. } => Some(1.0 / (1.0 + 25.0 * x * x)),
            TargetSpec::PoissonG => poisson_reference(&PoissonReference::default_terms()).ok().map(|r| r.source(x)),
            _ => None,
        }
    }

    /// Derivative of the clean 1-d target.
    pub fn clean_derivative(&self, x: f64) -> Option<f64> {
        match self {
            TargetSpec::ThreeSine { .. } => Some(x.cos() + 3.0 * (3.0 * x).cos() + 5.0 * (5.0 * x).cos()),
            TargetSpec::TwoSine { .. } => Some(x.cos() + 5.0 * (5.0 * x).cos()),
            TargetSpec::TwoTone { .. } => Some(x.cos() + 20.0 * (20.0 * x).cos()),
            TargetSpec::NoisyLowfreq { .. } => Some(0.5 * (0.5 * x).cos()),
            TargetSpec::RungePoly { .. } => Some(-50.0 * x / (1.0 + 25.0 * x * x).powi(2)),
            _ => None,
        }
    }

    /// Interval of a 1-d analytic target.
    pub fn domain(&self) -> Option<(f64, f64)> {
        match *self {
            TargetSpec::ThreeSine { lo, hi }
            | TargetSpec::TwoSine { lo, hi }
            | TargetSpec::TwoTone { lo, hi }
            | TargetSpec::NoisyLowfreq { lo, hi, .. }
            | TargetSpec::RungePoly { lo, hi } => Some((lo, hi)),
            TargetSpec::PoissonG => Some((-1.0, 1.0)),
            _ => None,
        }
    }
}

/// `n` evenly spaced points on `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Vertex `index` of `{−1, 1}^d`: bit `j` set gives `x_j = −1`.
pub fn cube_vertex(index: usize, d: usize) -> Vec<f64> {
    (0..d).map(|j| if index >> j & 1 == 1 { -1.0 } else { 1.0 }).collect()
}

/// `n` distinct vertices of `{−1, 1}^d` drawn uniformly, in draw order, and the rest of the cube.
pub fn parity_split(d: usize, n: usize, seed: u64) -> ExpResult<(Vec<usize>, Vec<usize>)> {
    if d == 0 || d > 24 {
        return Err(ExpError::Config(format!("parity dimension must lie in 1..=24, got {d}")));
    }
    let total = 1usize << d;
    if n > total {
        return Err(ExpError::Config(format!("cannot draw {n} distinct points from 2^{d} = {total}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train = sample(&mut rng, total, n).into_vec();
    let mut taken = vec![false; total];
    train.iter().for_each(|&i| taken[i] = true);
    let rest = (0..total).filter(|&i| !taken[i]).collect();
    Ok((train, rest))
}

pub fn parity_dataset(d: usize, vertices: &[usize], provenance: String) -> ExpResult<LabeledDataset> {
    let mut inputs = Vec::with_capacity(vertices.len() * d);
    let mut targets = Vec::with_capacity(vertices.len());
    for &v in vertices {
        let x = cube_vertex(v, d);
        targets.push(x.iter().product());
        inputs.extend(x);
    }
    Ok(LabeledDataset::new(d, inputs, targets, provenance, Normalization::uniform(d, 0.0, 1.0))?)
}

/// Built-in grayscale test picture: a shaded background, a bright disk, a dark bar and
/// a band of fine stripes, so the image carries both coarse and fine structure.
pub fn synthetic_image(size: usize) -> GrayImage {
    let s = size.max(2) as f64 - 1.0;
    let mut pixels = Vec::with_capacity(size * size);
    for r in 0..size {
        for c in 0..size {
            let (y, x) = (r as f64 / s, c as f64 / s);
            let mut v = 0.25 + 0.35 * x;
            if (x - 0.38).powi(2) + (y - 0.4).powi(2) < 0.05 {
                v = 0.9;
            }
            if (0.62..0.72).contains(&x) && (0.15..0.85).contains(&y) {
                v = 0.1;
            }
            if y > 0.8 {
                v += 0.15 * (2.0 * std::f64::consts::PI * 8.0 * x).sin();
            }
            pixels.push((v.clamp(0.0, 1.0) * 255.0).round() as u16);
        }
    }
    GrayImage { width: size, height: size, maxval: 255, pixels }
}

/// A path as given, or relative to the workspace root when it does not exist as given.
pub fn resolve_data_path(p: &Path) -> PathBuf {
    if p.is_absolute() || p.exists() {
        return p.to_path_buf();
    }
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(p);
    if root.exists() {
        root
    } else {
        p.to_path_buf()
    }
}

fn existing(p: &Path) -> ExpResult<PathBuf> {
    let r = resolve_data_path(p);
    if r.exists() {
        Ok(r)
    } else {
        Err(ExpError::MissingData(p.to_path_buf()))
    }
}

/// Deterministic samples of `spec`.
///
/// Analytic 1-d targets are sampled at `n` evenly spaced points with endpoints; the
/// Poisson source at the `n` interior points `−1 + 2i/(n+1)`. Parity draws `n` distinct
/// vertices. File-backed targets keep their first `n` samples.
pub fn make_target(spec: &TargetSpec, n: usize, seed: u64) -> ExpResult<LabeledDataset> {
    if n == 0 {
        return Err(ExpError::Config("sample count must be at least 1".into()));
    }
    let analytic = |xs: Vec<f64>, ys: Vec<f64>, what: &str| -> ExpResult<LabeledDataset> {
        Ok(LabeledDataset::new(1, xs, ys, what.to_string(), Normalization::uniform(1, 0.0, 1.0))?)
    };
    match spec {
        TargetSpec::ThreeSine { lo, hi } | TargetSpec::TwoSine { lo, hi } | TargetSpec::TwoTone { lo, hi } | TargetSpec::RungePoly { lo, hi } => {
            let xs = linspace(*lo, *hi, n);
            let ys = xs.iter().map(|&x| spec.clean(x).expect("analytic")).collect();
            analytic(xs, ys, &format!("{spec:?}"))
        }
        TargetSpec::NoisyLowfreq { lo, hi, sigma } => {
            let normal = Normal::new(0.0, *sigma).map_err(|e| ExpError::Config(format!("noise: {e}")))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs = linspace(*lo, *hi, n);
            let ys = xs.iter().map(|&x| (0.5 * x).sin() + normal.sample(&mut rng)).collect();
            analytic(xs, ys, &format!("{spec:?} seed {seed}"))
        }
        TargetSpec::PoissonG => {
            let xs: Vec<f64> = (1..=n).map(|i| -1.0 + 2.0 * i as f64 / (n + 1) as f64).collect();
            let ys = xs.iter().map(|&x| spec.clean(x).expect("analytic")).collect();
            analytic(xs, ys, "poisson source")
        }
        TargetSpec::Parity { d } => {
            let (train, _) = parity_split(*d, n, seed)?;
            parity_dataset(*d, &train, format!("parity d={d} seed {seed}"))
        }
        TargetSpec::Image { path, size } => {
            let data = match path {
                Some(p) => load_grayscale_image(&existing(p)?)?,
                None => image_dataset(&synthetic_image(*size), format!("synthetic {size}x{size}"))?,
            };
            Ok(data.truncated(n))
        }
        TargetSpec::IdxDataset { images, labels, subset } => {
            let data = load_idx(&existing(images)?, &existing(labels)?, subset)?;
            Ok(data.truncated(n))
        }
    }
}
