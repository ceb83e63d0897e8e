use std::path::PathBuf;

use fplab_core::freq::FilteredErrors;
use fplab_core::{EpochRecord, RunRecord, Snapshot};
use fplab_io::{decode_run_record, encode_run_record, load_idx, read_idx_images, read_idx_labels, write_idx_images, write_idx_labels};
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist01").join(name)
}

fn real() -> impl Strategy<Value = f64> {
    prop_oneof![
        8 => any::<f64>().prop_filter("finite", |v| v.is_finite()),
        1 => Just(f64::NAN),
        1 => Just(f64::INFINITY),
        1 => Just(f64::NEG_INFINITY),
    ]
}

fn record() -> impl Strategy<Value = RunRecord> {
    (0usize..4, 0usize..3, any::<u64>(), "[a-f0-9]{0,16}").prop_flat_map(|(keys, deltas, seed, hash)| {
        let epoch = (
            proptest::collection::vec(real(), keys),
            real(),
            proptest::option::of(real()),
            proptest::collection::vec((proptest::option::of(real()), proptest::option::of(real())), deltas),
        );
        (
            proptest::collection::vec(real(), keys),
            proptest::collection::vec(real(), deltas),
            proptest::collection::vec(epoch, 0..6),
            proptest::collection::vec((proptest::collection::vec(real(), 0..4), proptest::option::of(proptest::collection::vec(real(), 0..3))), 0..3),
            any::<bool>(),
        )
            .prop_map(move |(probe_keys, filter_deltas, epochs, snaps, diverged)| {
                let mut r = RunRecord::new(hash.clone(), seed, probe_keys, filter_deltas.clone());
                for (i, (delta_f, train_loss, test_loss, filt)) in epochs.into_iter().enumerate() {
                    let filtered = filt
                        .into_iter()
                        .zip(&filter_deltas)
                        .map(|((e_low, e_high), d)| FilteredErrors { delta: *d, e_low, e_high })
                        .collect();
                    r.epochs.push(EpochRecord { epoch: 3 * i as u64, train_loss, test_loss, delta_f, filtered });
                }
                for (i, (outputs, params)) in snaps.into_iter().enumerate() {
                    r.snapshots.push(Snapshot { epoch: 5 * i as u64, outputs, params });
                }
                r.diverged = diverged;
                r
            })
    })
}

proptest! {
    #[test]
    fn run_records_round_trip_bit_exactly(r in record()) {
        let text = encode_run_record(&r);
        let back = decode_run_record(&text).unwrap();
        // re-encoding compares every real through its exact textual form, NaN included
        prop_assert_eq!(encode_run_record(&back), text);
        let bits = |r: &RunRecord| r.epochs.iter().flat_map(|e| e.delta_f.iter().map(|v| v.to_bits())).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&r));
    }
}

#[test]
fn mnist_fixture_loads_both_digits() {
    let d = load_idx(&fixture("images-idx3-ubyte"), &fixture("labels-idx1-ubyte"), &[0, 1]).unwrap();
    assert_eq!((d.len(), d.dim), (2128, 784));
    assert_eq!(d.targets.iter().filter(|t| **t == 0.0).count(), 1001);
    assert!(d.inputs.iter().all(|v| (0.0..=1.0).contains(v)));
    let ones = load_idx(&fixture("images-idx3-ubyte"), &fixture("labels-idx1-ubyte"), &[1]).unwrap();
    assert_eq!(ones.len(), 1127);
}

#[test]
fn mnist_fixture_reencodes_identically() {
    let img_bytes = std::fs::read(fixture("images-idx3-ubyte")).unwrap();
    let lab_bytes = std::fs::read(fixture("labels-idx1-ubyte")).unwrap();
    assert_eq!(write_idx_images(&read_idx_images(&img_bytes).unwrap()), img_bytes);
    assert_eq!(write_idx_labels(&read_idx_labels(&lab_bytes).unwrap()), lab_bytes);
}
