use csiauth::dataset::{generate_pair, Dataset, Label, PairGenConfig};
use csiauth::eval::{auc_from_samples, score_dataset, Detector};
use csiauth::models::{train, ArchSpec, TrainConfig};
use csiauth::rng::derive_seed;

fn pairs(seed: u64, n: u64, snr_db: f64) -> Dataset {
    let mut out = Vec::new();
    for j in 0..n {
        let (a, b) = generate_pair(&PairGenConfig {
            snr_db,
            d_bm_wavelengths: 3.0,
            seed: derive_seed(seed, &[j]),
            ..PairGenConfig::default()
        })
        .unwrap();
        out.push(a);
        out.push(b);
    }
    Dataset::new("sanity", out)
}

fn mean_score(samples: &[csiauth::eval::ScoredSample<f64>], label: Label) -> f64 {
    let s: Vec<f64> = samples
        .iter()
        .filter(|s| s.label == label)
        .map(|s| s.score)
        .collect();
    s.iter().sum::<f64>() / s.len() as f64
}

#[test]
fn trained_cnn_orders_high_snr_pairs() {
    let cfg = TrainConfig {
        epochs: 4,
        seed: 2,
        ..TrainConfig::default()
    };
    let out = train::<f32>(&pairs(1, 400, 50.0), &ArchSpec::cnn(), &cfg).unwrap();
    assert!(out.trace.last().unwrap().mean_loss < out.trace[0].mean_loss);
    let samples = score_dataset(Detector::Siamese(&out.weights), &pairs(2, 300, 50.0)).unwrap();
    assert!(mean_score(&samples, Label::Same) < mean_score(&samples, Label::Different));
    assert!(auc_from_samples(&samples).unwrap() > 0.7);
}

#[test]
fn correlation_orders_high_snr_pairs() {
    let samples = score_dataset(Detector::Correlation, &pairs(3, 300, 50.0)).unwrap();
    assert!(mean_score(&samples, Label::Same) < mean_score(&samples, Label::Different));
}

#[test]
fn fcn_trains_without_divergence() {
    let cfg = TrainConfig {
        epochs: 2,
        seed: 4,
        ..TrainConfig::default()
    };
    let out = train::<f32>(&pairs(5, 100, 20.0), &ArchSpec::fcn(), &cfg).unwrap();
    assert_eq!(out.trace.len(), 2);
    assert!(out.trace.iter().all(|e| e.mean_loss.is_finite()));
}
