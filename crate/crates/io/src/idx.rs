//! IDX tensors as used by MNIST: big-endian `u32` header fields, unsigned-byte payload.

use std::path::Path;

use crate::dataset::{LabeledDataset, Normalization};
use crate::error::{file_err, read_file, IoError, IoResult};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    /// `count · rows · cols` bytes, image-major then row-major.
    pub pixels: Vec<u8>,
}

fn be_u32(bytes: &[u8], at: usize) -> IoResult<u32> {
    let b = bytes.get(at..at + 4).ok_or(IoError::Truncated { needed: at + 4, available: bytes.len() })?;
    Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
}

fn check_magic(bytes: &[u8], expected: u32) -> IoResult<()> {
    let found = be_u32(bytes, 0)?;
    if found != expected {
        return Err(IoError::BadMagic { expected, found });
    }
    Ok(())
}

fn payload(bytes: &[u8], start: usize, len: usize) -> IoResult<&[u8]> {
    bytes.get(start..start + len).ok_or(IoError::Truncated { needed: start + len, available: bytes.len() })
}

pub fn read_idx_images(bytes: &[u8]) -> IoResult<IdxImages> {
    check_magic(bytes, IMAGES_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let pixels = payload(bytes, 16, count * rows * cols)?.to_vec();
    Ok(IdxImages { count, rows, cols, pixels })
}

pub fn read_idx_labels(bytes: &[u8]) -> IoResult<Vec<u8>> {
    check_magic(bytes, LABELS_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    Ok(payload(bytes, 8, count)?.to_vec())
}

pub fn write_idx_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [IMAGES_MAGIC, images.count as u32, images.rows as u32, images.cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn write_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Images whose label is in `subset`, intensities scaled to `[0, 1]`, target = position of
/// the label in `subset` (so `{0, 1}` keeps the digit value).
pub fn load_idx(images: &Path, labels: &Path, subset: &[u8]) -> IoResult<LabeledDataset> {
    if subset.is_empty() {
        return Err(IoError::Invalid("label subset is empty".into()));
    }
    let imgs = read_idx_images(&read_file(images)?)?;
    let labs = read_idx_labels(&read_file(labels)?)?;
    if labs.len() != imgs.count {
        return Err(IoError::Invalid(format!("{} labels for {} images", labs.len(), imgs.count)));
    }
    let dim = imgs.rows * imgs.cols;
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for (i, l) in labs.iter().enumerate() {
        if let Some(pos) = subset.iter().position(|s| s == l) {
            inputs.extend(imgs.pixels[i * dim..(i + 1) * dim].iter().map(|&p| f64::from(p) / 255.0));
            targets.push(pos as f64);
        }
    }
    if targets.is_empty() {
        return Err(IoError::Invalid(format!("no image carries a label in {subset:?}")));
    }
    let provenance = format!("idx:{}+{} labels {subset:?}", images.display(), labels.display());
    LabeledDataset::new(dim, inputs, targets, provenance, Normalization::uniform(dim, 0.0, 1.0 / 255.0))
}

/// Write an IDX image/label pair to disk.
pub fn save_idx(images_path: &Path, labels_path: &Path, images: &IdxImages, labels: &[u8]) -> IoResult<()> {
    std::fs::write(images_path, write_idx_images(images)).map_err(file_err(images_path))?;
    std::fs::write(labels_path, write_idx_labels(labels)).map_err(file_err(labels_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (IdxImages, Vec<u8>) {
        let images = IdxImages { count: 3, rows: 2, cols: 2, pixels: vec![0, 255, 10, 20, 1, 2, 3, 4, 255, 255, 0, 0] };
        (images, vec![1, 7, 0])
    }

    #[test]
    fn round_trip() {
        let (images, labels) = sample();
        assert_eq!(read_idx_images(&write_idx_images(&images)).unwrap(), images);
        assert_eq!(read_idx_labels(&write_idx_labels(&labels)).unwrap(), labels);
    }

    #[test]
    fn rejects_bad_headers() {
        let (images, labels) = sample();
        let bytes = write_idx_images(&images);
        assert!(matches!(read_idx_labels(&bytes), Err(IoError::BadMagic { .. })));
        assert!(matches!(read_idx_images(&bytes[..bytes.len() - 1]), Err(IoError::Truncated { .. })));
        assert!(matches!(read_idx_labels(&write_idx_labels(&labels)[..3]), Err(IoError::Truncated { .. })));
    }

    #[test]
    fn subset_selection() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("i"), dir.path().join("l"));
        let (images, labels) = sample();
        save_idx(&ip, &lp, &images, &labels).unwrap();
        let d = load_idx(&ip, &lp, &[0, 1]).unwrap();
        assert_eq!((d.len(), d.dim), (2, 4));
        assert_eq!(d.targets, vec![1.0, 0.0]);
        assert_eq!(d.inputs[1], 1.0);
        assert!(load_idx(&ip, &lp, &[]).is_err());
        assert!(load_idx(&ip, &lp, &[5]).is_err());
    }
}
