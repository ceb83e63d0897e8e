//! Portable graymap (`P2` ASCII, `P5` binary) decoding.

use std::path::Path;

use crate::dataset::{LabeledDataset, Normalization};
use crate::error::{read_file, IoError, IoResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    /// Row-major samples.
    pub pixels: Vec<u16>,
}

/// Whitespace-separated header tokens, skipping `#` comments; returns the offset after the
/// single whitespace byte that ends the last token.
fn header_tokens(bytes: &[u8], count: usize) -> IoResult<(Vec<String>, usize)> {
    let mut tokens = Vec::with_capacity(count);
    let mut i = 0;
    while tokens.len() < count {
        match bytes.get(i) {
            None => return Err(IoError::Truncated { needed: i + 1, available: bytes.len() }),
            Some(b'#') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => i += 1,
            Some(_) => {
                let start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'#' {
                    i += 1;
                }
                tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
            }
        }
    }
    Ok((tokens, i + 1))
}

fn number(tok: &str, what: &str) -> IoResult<usize> {
    tok.parse().map_err(|_| IoError::Unsupported(format!("graymap {what} {tok:?} is not a number")))
}

pub fn parse_pgm(bytes: &[u8]) -> IoResult<GrayImage> {
    let (head, body) = header_tokens(bytes, 4)?;
    let binary = match head[0].as_str() {
        "P5" => true,
        "P2" => false,
        other => return Err(IoError::Unsupported(format!("magic {other:?} is not a graymap (P2/P5)"))),
    };
    let width = number(&head[1], "width")?;
    let height = number(&head[2], "height")?;
    let maxval = number(&head[3], "maxval")?;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(IoError::Unsupported(format!("graymap {width}x{height} with maxval {maxval}")));
    }
    let n = width * height;
    let pixels: Vec<u16> = if binary {
        let wide = maxval > 255;
        let need = n * if wide { 2 } else { 1 };
        let data = bytes.get(body..body + need).ok_or(IoError::Truncated { needed: body + need, available: bytes.len() })?;
        if wide {
            data.chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
        } else {
            data.iter().map(|&b| u16::from(b)).collect()
        }
    } else {
        let text = String::from_utf8_lossy(bytes.get(body.min(bytes.len())..).unwrap_or_default());
        let values: Vec<u16> = text
            .split_ascii_whitespace()
            .take(n)
            .map(|t| t.parse::<u16>().map_err(|_| IoError::Unsupported(format!("graymap sample {t:?}"))))
            .collect::<IoResult<_>>()?;
        if values.len() < n {
            return Err(IoError::Truncated { needed: n, available: values.len() });
        }
        values
    };
    if pixels.iter().any(|&p| usize::from(p) > maxval) {
        return Err(IoError::Invalid(format!("sample exceeds maxval {maxval}")));
    }
    Ok(GrayImage { width, height, maxval: maxval as u16, pixels })
}

/// One sample per pixel in row-major order: input `(row, col)` mapped to `[0, 1]` by
/// `index / (size − 1)` (0 for a size of 1), target intensity `/ maxval`.
pub fn load_grayscale_image(path: &Path) -> IoResult<LabeledDataset> {
    let img = parse_pgm(&read_file(path)?)?;
    image_dataset(&img, format!("pgm:{}", path.display()))
}

pub fn image_dataset(img: &GrayImage, provenance: String) -> IoResult<LabeledDataset> {
    let coord = |i: usize, size: usize| if size > 1 { i as f64 / (size - 1) as f64 } else { 0.0 };
    let mut inputs = Vec::with_capacity(2 * img.pixels.len());
    for r in 0..img.height {
        for c in 0..img.width {
            inputs.push(coord(r, img.height));
            inputs.push(coord(c, img.width));
        }
    }
    let targets = img.pixels.iter().map(|&p| f64::from(p) / f64::from(img.maxval)).collect();
    let scale = |size: usize| if size > 1 { 1.0 / (size - 1) as f64 } else { 1.0 };
    let norm = Normalization { shift: vec![0.0, 0.0], scale: vec![scale(img.height), scale(img.width)] };
    LabeledDataset::new(2, inputs, targets, provenance, norm)
}
