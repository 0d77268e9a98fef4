use std::path::PathBuf;

use csiauth::dataset::{
    build_experimental_pairs, generate_pair, generate_test_grid, ingest_raw_csv, read_dataset,
    write_dataset, IngestOptions, Label, PairGenConfig, Provenance, RawCsiRecord, TestAxis,
    TestGrid,
};
use csiauth::models::{read_weights, write_weights, ArchSpec, SiameseWeights, TrainConfig};
use csiauth::ofdm::SourceTag;
use csiauth::{Complex, Error};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

#[test]
fn golden_esp32_rows_parse_field_exact() {
    let report = ingest_raw_csv(fixture("esp32_golden.csv"), &IngestOptions::default()).unwrap();
    assert!(report.malformed.is_empty());
    assert!(report.warnings.is_empty());
    let r = &report.records;
    assert_eq!(r.len(), 3);

    assert_eq!(r[0].mac, [0xaa, 0xbb, 0xcc, 0xdd, 0xee, 0xff]);
    assert_eq!(r[1].mac, r[0].mac);
    assert_eq!(r[2].mac, [1, 2, 3, 10, 11, 12]);
    assert_eq!(
        (r[0].rssi_dbm, r[0].noise_floor, r[0].timestamp),
        (-41.0, -93.0, 12.5)
    );
    assert_eq!(
        (r[1].rssi_dbm, r[1].noise_floor, r[1].timestamp),
        (-57.5, -92.0, 12.51)
    );
    assert_eq!(
        (r[2].rssi_dbm, r[2].noise_floor, r[2].timestamp),
        (0.0, -100.0, 13.000125)
    );

    // values come in (imaginary, real) order per subcarrier
    for j in 0..64i32 {
        assert_eq!(
            r[0].subcarriers[j as usize],
            Complex::new((2 * j + 1 - 64) as i8, (2 * j - 64) as i8)
        );
        let v = |k: i32| (((k * 5) % 41) - 20) as i8;
        assert_eq!(
            r[1].subcarriers[j as usize],
            Complex::new(v(2 * j + 1), v(2 * j))
        );
        assert_eq!(r[2].subcarriers[j as usize], Complex::new(127, -128));
    }

    let csi = r[0].to_csi();
    assert_eq!(csi.len(), 52);
    assert_eq!(csi.meta.timestamp, Some(12.5));
    assert_eq!(csi.meta.source, SourceTag::Mac(r[0].mac));
    // subcarrier -26 sits at DFT index 38, subcarrier +26 at index 26
    assert_eq!(csi.estimates[0], Complex::new(13.0, 12.0));
    assert_eq!(csi.estimates[51], Complex::new(-11.0, -12.0));
}

fn records(n: usize) -> Vec<RawCsiRecord> {
    (0..n)
        .map(|i| RawCsiRecord {
            mac: [2, 0, 0, 0, 0, 1],
            rssi_dbm: -50.0,
            noise_floor: -95.0,
            timestamp: i as f64 * 0.01,
            subcarriers: (0..64)
                .map(|k| Complex::new((k + i) as i8, -((k % 7) as i8)))
                .collect(),
        })
        .collect()
}

#[test]
fn delta_k_pairing_arithmetic() {
    let (ds, warnings) = build_experimental_pairs(&records(101), 1, 100).unwrap();
    assert!(warnings.is_empty());
    assert_eq!(ds.label_counts(), (100, 1));
    let different: Vec<_> = ds
        .pairs
        .iter()
        .filter(|p| p.label == Label::Different)
        .collect();
    match different[0].provenance {
        Provenance::Experimental {
            index_a, index_b, ..
        } => assert_eq!((index_a, index_b), (0, 100)),
        other => panic!("unexpected provenance {other:?}"),
    }
    for (n, same, diff) in [(250, 1, 100), (60, 2, 50), (10, 1, 50)] {
        let (ds, _) = build_experimental_pairs(&records(n), same, diff).unwrap();
        assert_eq!(
            ds.label_counts(),
            (n.saturating_sub(same), n.saturating_sub(diff))
        );
    }
}

#[test]
fn dataset_file_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut sets = generate_test_grid(
        &[TestAxis::Distance],
        &TestGrid {
            pairs: 40,
            seed: 5,
            ..TestGrid::default()
        },
    )
    .unwrap();
    let (same, _) = generate_pair(&PairGenConfig::default()).unwrap();
    let mut ds = sets.remove(0);
    ds.pairs.push(same);
    ds.pairs
        .extend(build_experimental_pairs(&records(3), 1, 2).unwrap().0.pairs);

    let path = dir.path().join("a.ds");
    write_dataset(&ds, &path).unwrap();
    let back = read_dataset(&path).unwrap();
    assert_eq!(back, ds);
    for (p, q) in back.pairs.iter().zip(&ds.pairs) {
        for (x, y) in p.csi_a.estimates.iter().zip(&q.csi_a.estimates) {
            assert_eq!(
                (x.re.to_bits(), x.im.to_bits()),
                (y.re.to_bits(), y.im.to_bits())
            );
        }
    }
    let path2 = dir.path().join("b.ds");
    write_dataset(&back, &path2).unwrap();
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(&path2).unwrap()
    );
}

#[test]
fn truncated_dataset_names_offset() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = generate_pair(&PairGenConfig::default()).unwrap();
    let ds = csiauth::dataset::Dataset::new("t", vec![a, b]);
    let path = dir.path().join("t.ds");
    write_dataset(&ds, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    match read_dataset(&path) {
        Err(Error::Integrity { offset, .. }) => assert!(offset > 0),
        other => panic!("expected integrity error, got {other:?}"),
    }
}

#[test]
fn weights_file_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    for arch in [ArchSpec::cnn(), ArchSpec::fcn()] {
        let w = SiameseWeights::<f32>::init(&arch, 8).unwrap();
        let cfg = TrainConfig::default();
        let path = dir.path().join("m.w");
        write_weights(&w, Some(&cfg), &path).unwrap();
        let back = read_weights(&path).unwrap();
        assert_eq!(back.weights, w);
        assert_eq!(back.optimizer, Some(cfg));
        assert!(back
            .weights
            .params()
            .iter()
            .zip(w.params())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
