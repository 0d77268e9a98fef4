use std::sync::Arc;

use proptest::prelude::*;

use csiauth::channel::{build_pdp, ChannelState, PowerDelayProfile, TgnModel};
use csiauth::dataset::{
    generate_pair, generate_test_grid, parse_raw_csv, IngestOptions, Label, PairGenConfig,
    Provenance, TestAxis, TestGrid,
};
use csiauth::models::{min_max_normalize, ArchSpec, SiameseWeights};
use csiauth::ofdm::{channel_frequency_response, ls_estimate, standard_ltf, OfdmConfig};
use csiauth::Complex;

fn sampled_pdp(model: TgnModel) -> Arc<PowerDelayProfile<f64>> {
    Arc::new(build_pdp::<f64>(model).discretize(50.0).unwrap())
}

fn model_strategy() -> impl Strategy<Value = TgnModel> {
    prop::sample::select(TgnModel::ALL.to_vec())
}

fn taps(n: usize) -> impl Strategy<Value = Vec<Complex<f64>>> {
    prop::collection::vec(
        (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(re, im)| Complex::new(re, im)),
        n,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn frequency_response_is_linear(
        model in model_strategy(),
        h1 in taps(32),
        h2 in taps(32),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let pdp = sampled_pdp(model);
        let n = pdp.len();
        let (h1, h2) = (h1[..n].to_vec(), h2[..n].to_vec());
        let mix: Vec<_> = h1.iter().zip(&h2).map(|(&x, &y)| x * a + y * b).collect();
        let cfg = OfdmConfig::default();
        let r1 = channel_frequency_response(&ChannelState::new(h1, pdp.clone()).unwrap(), &cfg).unwrap();
        let r2 = channel_frequency_response(&ChannelState::new(h2, pdp.clone()).unwrap(), &cfg).unwrap();
        let rm = channel_frequency_response(&ChannelState::new(mix, pdp).unwrap(), &cfg).unwrap();
        for ((x, y), z) in r1.values.iter().zip(&r2.values).zip(&rm.values) {
            prop_assert!((x * a + y * b - z).norm() < 1e-12);
        }
    }

    #[test]
    fn noiseless_ls_inverts_exactly(model in model_strategy(), h in taps(32)) {
        let pdp = sampled_pdp(model);
        let state = ChannelState::new(h[..pdp.len()].to_vec(), pdp).unwrap();
        let response = channel_frequency_response(&state, &OfdmConfig::default()).unwrap();
        let ltf = standard_ltf();
        let y: Vec<_> = response.values.iter().zip(ltf.values()).map(|(&v, &x)| v * f64::from(x)).collect();
        prop_assert_eq!(ls_estimate(&y, &ltf).unwrap().estimates, response.values);
    }

    #[test]
    fn pair_generation_is_reproducible(seed in any::<u64>(), model in model_strategy()) {
        let cfg = PairGenConfig { seed, model, ..PairGenConfig::default() };
        prop_assert_eq!(generate_pair(&cfg).unwrap(), generate_pair(&cfg).unwrap());
    }

    #[test]
    fn pairs_share_their_first_estimate_and_lineage(seed in any::<u64>()) {
        let cfg = PairGenConfig { seed, ..PairGenConfig::default() };
        let (same, different) = generate_pair(&cfg).unwrap();
        prop_assert_eq!(same.label, Label::Same);
        prop_assert_eq!(different.label, Label::Different);
        prop_assert_eq!(&same.csi_a, &different.csi_a);
        prop_assert_eq!(same.provenance, Provenance::Synthetic(cfg));
        prop_assert_eq!(different.provenance, Provenance::Synthetic(cfg));
    }

    #[test]
    fn normalized_vectors_span_unit_interval(x in prop::collection::vec(0.0f64..100.0, 2..80)) {
        let y = min_max_normalize(&x);
        let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if x.iter().any(|&v| v != x[0]) {
            prop_assert_eq!((lo, hi), (0.0, 1.0));
        } else {
            prop_assert!(y.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn ingestion_keeps_order_and_count(stamps in prop::collection::vec(0u32..1_000_000, 1..40), bad in prop::collection::vec(any::<bool>(), 40)) {
        let mut text = String::from("mac,rssi,noise_floor,timestamp,csi\n");
        let csi: Vec<String> = (0..128).map(|k| ((k % 50) - 25).to_string()).collect();
        let mut good = Vec::new();
        for (i, &t) in stamps.iter().enumerate() {
            if bad[i] && i % 3 == 0 {
                text += &format!("aa:bb:cc:dd:ee:ff,-40,-90,{t},1 2 3\n");
            } else {
                text += &format!("aa:bb:cc:dd:ee:ff,-40,-90,{t},{}\n", csi.join(" "));
                good.push(f64::from(t));
            }
        }
        let opts = IngestOptions { max_malformed_fraction: 1.0, ..IngestOptions::default() };
        let report = parse_raw_csv(text.as_bytes(), &opts).unwrap();
        prop_assert_eq!(report.records.len() + report.malformed.len(), stamps.len());
        let parsed: Vec<f64> = report.records.iter().map(|r| r.timestamp).collect();
        prop_assert_eq!(parsed, good);
    }
}

#[test]
fn generated_grids_are_label_balanced() {
    for axis in [TestAxis::Snr, TestAxis::Interval, TestAxis::Distance] {
        let sets = generate_test_grid(
            &[axis],
            &TestGrid {
                pairs: 7,
                ..TestGrid::default()
            },
        )
        .unwrap();
        for ds in sets {
            assert_eq!(ds.label_counts(), (7, 7));
        }
    }
}

#[test]
fn branches_share_one_parameter_buffer() {
    // a swap of the inputs must give the same loss and parameter gradient
    let w = SiameseWeights::<f64>::init(&ArchSpec::cnn(), 3).unwrap();
    let a: Vec<f64> = (0..52).map(|i| 1.0 + (i as f64 * 0.37).sin()).collect();
    let b: Vec<f64> = (0..52).map(|i| 1.0 + (i as f64 * 0.11).cos()).collect();
    let g1 = w.gradients(&a, &b, Label::Different, 1.0).unwrap();
    let g2 = w.gradients(&b, &a, Label::Different, 1.0).unwrap();
    assert_eq!(g1.loss, g2.loss);
    for (x, y) in g1.params.iter().zip(&g2.params) {
        assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
    }
    assert_eq!(
        w.params().len(),
        csiauth::models::count_parameters(&ArchSpec::cnn())
    );
}
