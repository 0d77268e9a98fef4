use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{ArchSpec, Gradients, SiameseWeights};
use crate::dataset::{Dataset, Label};
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub margin_eta: f64,
    pub rmsprop_decay: f64,
    pub rmsprop_epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 20,
            margin_eta: 1.0,
            rmsprop_decay: 0.9,
            rmsprop_epsilon: 1e-7,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::domain("learning_rate must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::domain("batch_size must be positive"));
        }
        if !(self.margin_eta > 0.0) {
            return Err(Error::domain("margin_eta must be positive"));
        }
        if !(0.0..1.0).contains(&self.rmsprop_decay) {
            return Err(Error::domain("rmsprop_decay must lie in [0, 1)"));
        }
        if !(self.rmsprop_epsilon > 0.0) {
            return Err(Error::domain("rmsprop_epsilon must be positive"));
        }
        Ok(())
    }
}

/// RMSprop without momentum:
/// `v ← ρv + (1 − ρ)g²`, `p ← p − lr·g/(√v + ε)`.
#[derive(Clone, Debug)]
pub struct RmsProp<T> {
    pub learning_rate: T,
    pub decay: T,
    pub epsilon: T,
    mean_square: Vec<T>,
}

impl<T: Scalar> RmsProp<T> {
    pub fn new(n: usize, learning_rate: f64, decay: f64, epsilon: f64) -> Self {
        Self {
            learning_rate: T::lit(learning_rate),
            decay: T::lit(decay),
            epsilon: T::lit(epsilon),
            mean_square: vec![T::zero(); n],
        }
    }

    pub fn step(&mut self, params: &mut [T], grad: &[T]) {
        let one_minus = T::one() - self.decay;
        for ((p, &g), v) in params.iter_mut().zip(grad).zip(&mut self.mean_square) {
            *v = self.decay * *v + one_minus * g * g;
            *p -= self.learning_rate * g / (v.sqrt() + self.epsilon);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    /// Mean per-pair loss over the epoch, measured before each batch update.
    pub mean_loss: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutput<T> {
    pub weights: SiameseWeights<T>,
    pub trace: Vec<EpochLoss>,
}

/// Trains a fresh network with RMSprop over seeded shuffled mini-batches.
///
/// Per-pair gradients inside a batch may be computed on several threads;
/// they are summed in batch order, so the result depends only on the seed.
pub fn train<T: Scalar>(
    dataset: &Dataset,
    arch: &ArchSpec,
    config: &TrainConfig,
) -> Result<TrainOutput<T>> {
    config.validate()?;
    if !dataset.has_both_labels() {
        let (same, different) = dataset.label_counts();
        return Err(Error::Precondition(format!(
            "training needs both labels ({same} same, {different} different)"
        )));
    }
    let mut weights = SiameseWeights::<T>::init(arch, derive_seed(config.seed, &[0]))?;
    let inputs: Vec<(Vec<T>, Vec<T>, Label)> = dataset
        .pairs
        .iter()
        .map(|p| {
            let conv = |v: Vec<f32>| {
                v.into_iter()
                    .map(|x| T::lit(f64::from(x)))
                    .collect::<Vec<T>>()
            };
            (
                conv(p.csi_a.magnitudes()),
                conv(p.csi_b.magnitudes()),
                p.label,
            )
        })
        .collect();
    let eta = T::lit(config.margin_eta);
    let mut opt = RmsProp::new(
        weights.params().len(),
        config.learning_rate,
        config.rmsprop_decay,
        config.rmsprop_epsilon,
    );
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    let mut grad = vec![T::zero(); weights.params().len()];

    for epoch in 0..config.epochs {
        let mut rng = rng_from_seed(derive_seed(config.seed, &[1, epoch as u64]));
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let per_pair: Vec<Gradients<T>> = batch
                .par_iter()
                .map(|&i| {
                    let (a, b, label) = &inputs[i];
                    weights.gradients(a, b, *label, eta)
                })
                .collect::<Result<_>>()
                .map_err(|e| diverged(e, epoch, &trace))?;
            grad.iter_mut().for_each(|g| *g = T::zero());
            let scale = T::one() / T::from_usize_lossy(batch.len());
            for g in &per_pair {
                loss_sum += g.loss.as_f64();
                for (acc, &v) in grad.iter_mut().zip(&g.params) {
                    *acc += v;
                }
            }
            grad.iter_mut().for_each(|g| *g *= scale);
            opt.step(weights.params_mut(), &grad);
        }
        let mean_loss = loss_sum / inputs.len() as f64;
        if !mean_loss.is_finite() || weights.params().iter().any(|p| !p.is_finite()) {
            return Err(diverged(
                Error::Numeric("loss is not finite".into()),
                epoch,
                &trace,
            ));
        }
        trace.push(EpochLoss { epoch, mean_loss });
    }
    Ok(TrainOutput { weights, trace })
}

fn diverged(e: Error, epoch: usize, trace: &[EpochLoss]) -> Error {
    match e {
        Error::Numeric(msg) => {
            let losses: Vec<f64> = trace.iter().map(|t| t.mean_loss).collect();
            Error::Numeric(format!(
                "training diverged in epoch {epoch}: {msg}; loss trace so far {losses:?}"
            ))
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_pair, PairGenConfig};

    fn small_dataset(n: u64) -> Dataset {
        let mut pairs = Vec::new();
        for seed in 0..n {
            let (a, b) = generate_pair(&PairGenConfig {
                seed,
                snr_db: 20.0,
                d_bm_wavelengths: 3.0,
                ..PairGenConfig::default()
            })
            .unwrap();
            pairs.push(a);
            pairs.push(b);
        }
        Dataset::new("test", pairs)
    }

    #[test]
    fn rmsprop_single_step() {
        let mut opt = RmsProp::<f64>::new(2, 0.1, 0.9, 1e-7);
        let mut p = vec![1.0, -1.0];
        opt.step(&mut p, &[2.0, 0.0]);
        // v = 0.1·4 = 0.4
        assert!((p[0] - (1.0 - 0.1 * 2.0 / (0.4f64.sqrt() + 1e-7))).abs() < 1e-15);
        assert_eq!(p[1], -1.0);
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let ds = small_dataset(4);
        let cfg = TrainConfig {
            epochs: 0,
            seed: 9,
            ..TrainConfig::default()
        };
        let out = train::<f32>(&ds, &ArchSpec::cnn(), &cfg).unwrap();
        assert!(out.trace.is_empty());
        assert_eq!(
            out.weights,
            SiameseWeights::init(&ArchSpec::cnn(), derive_seed(9, &[0])).unwrap()
        );
    }

    #[test]
    fn same_seed_same_weights() {
        let ds = small_dataset(20);
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 8,
            seed: 3,
            ..TrainConfig::default()
        };
        let a = train::<f32>(&ds, &ArchSpec::cnn(), &cfg).unwrap();
        let b = train::<f32>(&ds, &ArchSpec::cnn(), &cfg).unwrap();
        assert_eq!(a.weights.params(), b.weights.params());
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.trace.len(), 2);
    }

    #[test]
    fn single_label_rejected() {
        let mut ds = small_dataset(3);
        ds.pairs.retain(|p| p.label == Label::Same);
        assert!(matches!(
            train::<f32>(&ds, &ArchSpec::cnn(), &TrainConfig::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let ds = small_dataset(4);
        let cfg = TrainConfig {
            learning_rate: 1e300,
            epochs: 3,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train::<f64>(&ds, &ArchSpec::fcn(), &cfg),
            Err(Error::Numeric(_))
        ));
    }
}
