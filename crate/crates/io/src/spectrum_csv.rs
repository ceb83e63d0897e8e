//! Spectra as CSV with header `key,re,im,mag`.

use std::path::Path;

use fplab_core::freq::ComplexSpectrum;
use num_complex::Complex64;

use crate::error::{file_err, read_file, IoError, IoResult};

pub const HEADER: [&str; 4] = ["key", "re", "im", "mag"];

pub fn write_spectrum_csv(path: &Path, spectrum: &ComplexSpectrum) -> IoResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| IoError::Invalid(format!("{}: {e}", path.display())))?;
    let csv_err = |e: csv::Error| IoError::Invalid(format!("{}: {e}", path.display()));
    w.write_record(HEADER).map_err(csv_err)?;
    for (k, a) in spectrum.keys.iter().zip(&spectrum.amps) {
        w.write_record([k.to_string(), a.re.to_string(), a.im.to_string(), a.norm().to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(file_err(path))
}

/// Reads `key`, `re` and `im`; `mag` is checked against `|re + i·im|`.
pub fn read_spectrum_csv(path: &Path) -> IoResult<ComplexSpectrum> {
    let bytes = read_file(path)?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let headers = r.headers().map_err(|e| IoError::CorruptLine { line: 1, message: e.to_string() })?;
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(IoError::CorruptLine { line: 1, message: format!("header must be {}", HEADER.join(",")) });
    }
    let mut keys = Vec::new();
    let mut amps = Vec::new();
    for (i, row) in r.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| IoError::CorruptLine { line, message: e.to_string() })?;
        let field = |j: usize| -> IoResult<f64> {
            row.get(j)
                .and_then(|s| s.trim().parse().ok())
                .ok_or(IoError::CorruptLine { line, message: format!("column {} is not a real", HEADER[j]) })
        };
        let z = Complex64::new(field(1)?, field(2)?);
        let mag = field(3)?;
        if (mag - z.norm()).abs() > 1e-12 * mag.abs().max(1e-300) {
            return Err(IoError::CorruptLine { line, message: format!("mag {mag} disagrees with |re + i im| = {}", z.norm()) });
        }
        keys.push(field(0)?);
        amps.push(z);
    }
    Ok(ComplexSpectrum { keys, amps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let s = ComplexSpectrum { keys: vec![0.0, 1.5, 20.0], amps: vec![Complex64::new(1.0, 0.0), Complex64::new(-0.1, 1.0 / 3.0), Complex64::new(0.0, -2e-300)] };
        write_spectrum_csv(&path, &s).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("key,re,im,mag\n"));
        assert_eq!(read_spectrum_csv(&path).unwrap(), s);
    }

    #[test]
    fn inconsistent_magnitude_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, "key,re,im,mag\n1,3,4,5\n2,1,0,2\n").unwrap();
        assert!(matches!(read_spectrum_csv(&path), Err(IoError::CorruptLine { line: 3, .. })));
    }
}
