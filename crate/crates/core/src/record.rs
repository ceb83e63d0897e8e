//! Per-epoch training traces.

use serde::{Deserialize, Serialize};

use crate::freq::filter::FilteredErrors;

/// Diagnostics at one recorded epoch (the state after `epoch` epochs of training).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u64,
    pub train_loss: f64,
    pub test_loss: Option<f64>,
    /// `Δ_F` per probe key, aligned with [`RunRecord::probe_keys`].
    pub delta_f: Vec<f64>,
    /// One entry per filter width, aligned with [`RunRecord::filter_deltas`].
    pub filtered: Vec<FilteredErrors>,
}

/// Model outputs on the evaluation grid, optionally with the parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub epoch: u64,
    pub outputs: Vec<f64>,
    pub params: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub probe_keys: Vec<f64>,
    pub filter_deltas: Vec<f64>,
    pub epochs: Vec<EpochRecord>,
    pub snapshots: Vec<Snapshot>,
    /// Training aborted on a non-finite or exploding loss; the trace ends at the offending epoch.
    pub diverged: bool,
}

impl RunRecord {
    pub fn new(config_hash: impl Into<String>, seed: u64, probe_keys: Vec<f64>, filter_deltas: Vec<f64>) -> Self {
        Self { config_hash: config_hash.into(), seed, probe_keys, filter_deltas, epochs: Vec::new(), snapshots: Vec::new(), diverged: false }
    }

    pub fn final_epoch(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }

    pub fn key_index(&self, key: f64) -> Option<usize> {
        self.probe_keys.iter().position(|k| (k - key).abs() <= 1e-9 * key.abs().max(1.0))
    }

    /// `Δ_F` trajectory of one probe key as `(epoch, value)` pairs.
    pub fn delta_f_series(&self, key: f64) -> Option<Vec<(u64, f64)>> {
        let i = self.key_index(key)?;
        Some(self.epochs.iter().map(|e| (e.epoch, e.delta_f[i])).collect())
    }

    /// First recorded epoch with `Δ_F(key) < threshold`.
    pub fn first_crossing(&self, key: f64, threshold: f64) -> Option<u64> {
        let i = self.key_index(key)?;
        self.epochs.iter().find(|e| e.delta_f[i] < threshold).map(|e| e.epoch)
    }

    /// Checks the trace invariants: strictly increasing epochs and complete probe rows.
    pub fn validate(&self) -> Result<(), String> {
        for w in self.epochs.windows(2) {
            if w[1].epoch <= w[0].epoch {
                return Err(format!("epoch {} follows epoch {}", w[1].epoch, w[0].epoch));
            }
        }
        for e in &self.epochs {
            if e.delta_f.len() != self.probe_keys.len() {
                return Err(format!("epoch {} has {} probe values, expected {}", e.epoch, e.delta_f.len(), self.probe_keys.len()));
            }
            if e.filtered.len() != self.filter_deltas.len() {
                return Err(format!("epoch {} has {} filter entries, expected {}", e.epoch, e.filtered.len(), self.filter_deltas.len()));
            }
        }
        for w in self.snapshots.windows(2) {
            if w[1].epoch <= w[0].epoch {
                return Err(format!("snapshot epoch {} follows {}", w[1].epoch, w[0].epoch));
            }
        }
        Ok(())
    }
}

/// 64-bit FNV-1a digest rendered as 16 hex digits.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(values: &[(u64, f64)]) -> RunRecord {
        let mut r = RunRecord::new("h", 1, vec![1.0], vec![]);
        for &(epoch, d) in values {
            r.epochs.push(EpochRecord { epoch, train_loss: 0.0, test_loss: None, delta_f: vec![d], filtered: vec![] });
        }
        r
    }

    #[test]
    fn first_crossing_uses_strict_threshold() {
        let r = rec(&[(0, 1.0), (10, 0.1), (20, 0.05)]);
        assert_eq!(r.first_crossing(1.0, 0.1), Some(20));
        assert_eq!(r.first_crossing(1.0, 0.01), None);
        assert_eq!(r.first_crossing(2.0, 0.1), None);
    }

    #[test]
    fn validation_catches_bad_traces() {
        assert!(rec(&[(0, 1.0), (5, 1.0)]).validate().is_ok());
        assert!(rec(&[(5, 1.0), (5, 1.0)]).validate().is_err());
        let mut r = rec(&[(0, 1.0)]);
        r.epochs[0].delta_f.clear();
        assert!(r.validate().is_err());
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a_hex(b""), "cbf29ce484222325");
        assert_eq!(fnv1a_hex(b"a"), "af63dc4c8601ec8c");
    }
}
