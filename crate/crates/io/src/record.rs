//! Run records as JSON lines.
//!
//! Line 1 is a header `{"type":"header","schema":"1","config_hash":…,"seed":…,"probe_keys":[…],"filter_deltas":[…]}`.
//! It is followed by `epoch` and `snapshot` lines in any order and a closing
//! `{"type":"end","diverged":…}`. A file without the closing line is a partial run and
//! reads as not diverged. Non-finite reals are written as the strings `"NaN"`,
//! `"Infinity"` and `"-Infinity"`; finite reals use shortest round-trip decimals.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use fplab_core::freq::FilteredErrors;
use fplab_core::{EpochRecord, RunRecord, Snapshot};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{file_err, read_file, IoError, IoResult};

pub const SCHEMA_VERSION: &str = "1";

/// A real that survives JSON even when non-finite.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Real(f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("NaN")
        } else if v > 0.0 {
            s.serialize_str("Infinity")
        } else {
            s.serialize_str("-Infinity")
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Real(v)),
            Raw::Text(t) => match t.as_str() {
                "NaN" => Ok(Real(f64::NAN)),
                "Infinity" => Ok(Real(f64::INFINITY)),
                "-Infinity" => Ok(Real(f64::NEG_INFINITY)),
                other => Err(serde::de::Error::custom(format!("{other:?} is not a real"))),
            },
        }
    }
}

fn reals(v: &[f64]) -> Vec<Real> {
    v.iter().copied().map(Real).collect()
}

fn unreal(v: Vec<Real>) -> Vec<f64> {
    v.into_iter().map(|r| r.0).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct FilterEntry {
    delta: Real,
    e_low: Option<Real>,
    e_high: Option<Real>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum Line {
    Header { schema: String, config_hash: String, seed: u64, probe_keys: Vec<Real>, filter_deltas: Vec<Real> },
    Epoch { epoch: u64, train_loss: Real, test_loss: Option<Real>, delta_f: Vec<Real>, filtered: Vec<FilterEntry> },
    Snapshot { epoch: u64, outputs: Vec<Real>, params: Option<Vec<Real>> },
    End { diverged: bool },
}

fn header_line(r: &RunRecord) -> Line {
    Line::Header {
        schema: SCHEMA_VERSION.into(),
        config_hash: r.config_hash.clone(),
        seed: r.seed,
        probe_keys: reals(&r.probe_keys),
        filter_deltas: reals(&r.filter_deltas),
    }
}

fn epoch_line(e: &EpochRecord) -> Line {
    Line::Epoch {
        epoch: e.epoch,
        train_loss: Real(e.train_loss),
        test_loss: e.test_loss.map(Real),
        delta_f: reals(&e.delta_f),
        filtered: e
            .filtered
            .iter()
            .map(|f| FilterEntry { delta: Real(f.delta), e_low: f.e_low.map(Real), e_high: f.e_high.map(Real) })
            .collect(),
    }
}

fn snapshot_line(s: &Snapshot) -> Line {
    Line::Snapshot { epoch: s.epoch, outputs: reals(&s.outputs), params: s.params.as_deref().map(reals) }
}

fn to_json(line: &Line) -> String {
    serde_json::to_string(line).expect("record lines always serialize")
}

/// Whole record as text, header first and the closing line last.
pub fn encode_run_record(r: &RunRecord) -> String {
    let mut out = String::new();
    let lines = std::iter::once(header_line(r))
        .chain(r.epochs.iter().map(epoch_line))
        .chain(r.snapshots.iter().map(snapshot_line))
        .chain(std::iter::once(Line::End { diverged: r.diverged }));
    for l in lines {
        out.push_str(&to_json(&l));
        out.push('\n');
    }
    out
}

pub fn decode_run_record(text: &str) -> IoResult<RunRecord> {
    let mut record: Option<RunRecord> = None;
    let mut ended = false;
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let corrupt = |message: String| IoError::CorruptLine { line: n, message };
        if ended {
            return Err(corrupt("content after the closing line".into()));
        }
        let line: Line = serde_json::from_str(raw).map_err(|e| corrupt(e.to_string()))?;
        match (line, record.as_mut()) {
            (Line::Header { schema, config_hash, seed, probe_keys, filter_deltas }, None) => {
                if schema != SCHEMA_VERSION {
                    return Err(IoError::SchemaVersion { expected: SCHEMA_VERSION.into(), found: schema });
                }
                record = Some(RunRecord::new(config_hash, seed, unreal(probe_keys), unreal(filter_deltas)));
            }
            (_, None) => return Err(corrupt("first line must be the header".into())),
            (Line::Header { .. }, Some(_)) => return Err(corrupt("second header".into())),
            (Line::Epoch { epoch, train_loss, test_loss, delta_f, filtered }, Some(r)) => {
                if delta_f.len() != r.probe_keys.len() || filtered.len() != r.filter_deltas.len() {
                    return Err(corrupt(format!("epoch {epoch} does not match the header's probe layout")));
                }
                r.epochs.push(EpochRecord {
                    epoch,
                    train_loss: train_loss.0,
                    test_loss: test_loss.map(|v| v.0),
                    delta_f: unreal(delta_f),
                    filtered: filtered
                        .into_iter()
                        .map(|f| FilteredErrors { delta: f.delta.0, e_low: f.e_low.map(|v| v.0), e_high: f.e_high.map(|v| v.0) })
                        .collect(),
                });
            }
            (Line::Snapshot { epoch, outputs, params }, Some(r)) => {
                r.snapshots.push(Snapshot { epoch, outputs: unreal(outputs), params: params.map(unreal) });
            }
            (Line::End { diverged }, Some(r)) => {
                r.diverged = diverged;
                ended = true;
            }
        }
    }
    let record = record.ok_or(IoError::CorruptLine { line: 1, message: "missing header".into() })?;
    record.validate().map_err(IoError::Invalid)?;
    Ok(record)
}

pub fn write_run_record(path: &Path, r: &RunRecord) -> IoResult<()> {
    std::fs::write(path, encode_run_record(r)).map_err(file_err(path))
}

pub fn read_run_record(path: &Path) -> IoResult<RunRecord> {
    let bytes = read_file(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| IoError::Invalid(format!("{}: {e}", path.display())))?;
    decode_run_record(text)
}

/// Incremental writer: every line is flushed as it is produced, so an aborted run leaves
/// a readable prefix.
pub struct RecordWriter {
    out: BufWriter<File>,
    path: std::path::PathBuf,
}

impl RecordWriter {
    pub fn create(path: &Path, header: &RunRecord) -> IoResult<Self> {
        let file = File::create(path).map_err(file_err(path))?;
        let mut w = Self { out: BufWriter::new(file), path: path.to_path_buf() };
        w.line(&header_line(header))?;
        Ok(w)
    }

    fn line(&mut self, l: &Line) -> IoResult<()> {
        let path = self.path.clone();
        writeln!(self.out, "{}", to_json(l)).and_then(|_| self.out.flush()).map_err(file_err(&path))
    }

    pub fn epoch(&mut self, e: &EpochRecord) -> IoResult<()> {
        self.line(&epoch_line(e))
    }

    pub fn snapshot(&mut self, s: &Snapshot) -> IoResult<()> {
        self.line(&snapshot_line(s))
    }

    pub fn finish(mut self, diverged: bool) -> IoResult<()> {
        self.line(&Line::End { diverged })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunRecord {
        let mut r = RunRecord::new("abc", u64::MAX, vec![1.0, 3.0], vec![0.5]);
        r.epochs.push(EpochRecord {
            epoch: 0,
            train_loss: 0.1 + 0.2,
            test_loss: None,
            delta_f: vec![f64::NAN, 1e-300],
            filtered: vec![FilteredErrors { delta: 0.5, e_low: Some(f64::INFINITY), e_high: None }],
        });
        r.epochs.push(EpochRecord {
            epoch: 7,
            train_loss: f64::NEG_INFINITY,
            test_loss: Some(2.5e-17),
            delta_f: vec![0.3, -0.0],
            filtered: vec![FilteredErrors { delta: 0.5, e_low: Some(0.1), e_high: Some(0.7) }],
        });
        r.snapshots.push(Snapshot { epoch: 7, outputs: vec![1.0 / 3.0], params: Some(vec![std::f64::consts::PI]) });
        r.diverged = true;
        r
    }

    fn same(a: &RunRecord, b: &RunRecord) -> bool {
        // NaN-aware comparison through the bit patterns of the encoded text
        encode_run_record(a) == encode_run_record(b) && a.epochs[0].delta_f[0].is_nan() == b.epochs[0].delta_f[0].is_nan()
    }

    #[test]
    fn round_trip_preserves_bits() {
        let r = sample();
        let back = decode_run_record(&encode_run_record(&r)).unwrap();
        assert!(same(&r, &back));
        assert_eq!(back.epochs[0].train_loss.to_bits(), r.epochs[0].train_loss.to_bits());
        assert_eq!(back.epochs[1].delta_f[1].to_bits(), (-0.0f64).to_bits());
        assert_eq!(back.seed, u64::MAX);
    }

    #[test]
    fn empty_trace_is_header_plus_end() {
        let r = RunRecord::new("h", 3, vec![], vec![]);
        let text = encode_run_record(&r);
        assert_eq!(text.lines().count(), 2);
        assert_eq!(decode_run_record(&text).unwrap(), r);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = encode_run_record(&sample());
        let mut lines: Vec<&str> = text.lines().collect();
        lines[2] = "{\"type\":\"epoch\",";
        match decode_run_record(&lines.join("\n")) {
            Err(IoError::CorruptLine { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let bumped = text.replacen("\"schema\":\"1\"", "\"schema\":\"2\"", 1);
        assert!(matches!(decode_run_record(&bumped), Err(IoError::SchemaVersion { .. })));
    }

    #[test]
    fn partial_file_is_readable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let r = sample();
        let mut w = RecordWriter::create(&path, &r).unwrap();
        w.epoch(&r.epochs[0]).unwrap();
        drop(w);
        let back = read_run_record(&path).unwrap();
        assert_eq!(back.epochs.len(), 1);
        assert!(!back.diverged);
    }
}
