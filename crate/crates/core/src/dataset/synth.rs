use std::sync::Arc;

use rayon::prelude::*;

use crate::channel::{
    attacker_channel, autocorrelation, build_pdp, doppler_spread, evolve_channel,
    sample_initial_channel, spatial_correlation, wavelength_for, PowerDelayProfile, TgnModel,
    BELL_CONSTANT,
};
use crate::ofdm::{simulate_csi, CsiVector, OfdmConfig, SourceTag};
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

use super::{Dataset, Label, LabeledPair, Provenance};

/// Everything needed to regenerate one legitimate/attacker pair couple.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairGenConfig {
    pub model: TgnModel,
    /// `f64::INFINITY` disables noise.
    pub snr_db: f64,
    /// Packet interval Δt_k, s.
    pub dt_s: f64,
    /// Terminal speed, m/s.
    pub v0: f64,
    /// Carrier wavelength, m.
    pub wavelength: f64,
    /// Legitimate/attacker separation in wavelengths.
    pub d_bm_wavelengths: f64,
    pub theta: f64,
    pub seed: u64,
}

impl Default for PairGenConfig {
    fn default() -> Self {
        Self {
            model: TgnModel::B,
            snr_db: 20.0,
            dt_s: 3e-3,
            v0: 1.0,
            wavelength: wavelength_for(2.4e9),
            d_bm_wavelengths: 0.25,
            theta: 1.0,
            seed: 0,
        }
    }
}

impl PairGenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_s > 0.0) || !self.dt_s.is_finite() {
            return Err(Error::domain(format!(
                "transmission interval must be positive, got {}",
                self.dt_s
            )));
        }
        if !(self.d_bm_wavelengths >= 0.0) || !self.d_bm_wavelengths.is_finite() {
            return Err(Error::domain(format!(
                "attacker distance must be non-negative, got {}",
                self.d_bm_wavelengths
            )));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::domain(format!(
                "SNR must be finite or +inf, got {}",
                self.snr_db
            )));
        }
        if !(self.theta > 0.0) || !self.theta.is_finite() {
            return Err(Error::domain(format!(
                "theta must be positive, got {}",
                self.theta
            )));
        }
        doppler_spread(self.v0, self.wavelength)?;
        Ok(())
    }

    /// Temporal correlation between consecutive legitimate packets.
    pub fn temporal_correlation(&self) -> Result<f64> {
        let fd = doppler_spread(self.v0, self.wavelength)?;
        autocorrelation(fd, self.dt_s, BELL_CONSTANT)
    }

    /// Correlation between the legitimate and attacker channels.
    pub fn spatial_correlation(&self) -> Result<f64> {
        let fd = doppler_spread(self.v0, self.wavelength)?;
        spatial_correlation(
            self.d_bm_wavelengths * self.wavelength,
            fd,
            self.wavelength,
            BELL_CONSTANT,
        )
    }
}

fn sampled_pdp(model: TgnModel, ofdm: &OfdmConfig) -> Result<Arc<PowerDelayProfile<f64>>> {
    Ok(Arc::new(
        build_pdp::<f64>(model).discretize(ofdm.sample_period_ns())?,
    ))
}

fn tagged(mut csi: CsiVector<f64>, source: SourceTag) -> CsiVector<f32> {
    csi.meta.source = source;
    csi.cast()
}

/// Draws `h[k]`, evolves it to `h[k+1]`, derives the attacker channel from
/// `h[k+1]` and returns the `(Ĥ[k], Ĥ[k+1])` pair labelled `Same` and the
/// `(Ĥ[k], Ĥ_attacker[k+1])` pair labelled `Different`.
pub fn generate_pair(config: &PairGenConfig) -> Result<(LabeledPair, LabeledPair)> {
    generate_pair_with(config, &OfdmConfig::default())
}

fn generate_pair_with(
    config: &PairGenConfig,
    ofdm: &OfdmConfig,
) -> Result<(LabeledPair, LabeledPair)> {
    config.validate()?;
    let pdp = sampled_pdp(config.model, ofdm)?;
    generate_pair_from(config, ofdm, &pdp)
}

fn generate_pair_from(
    config: &PairGenConfig,
    ofdm: &OfdmConfig,
    pdp: &Arc<PowerDelayProfile<f64>>,
) -> Result<(LabeledPair, LabeledPair)> {
    let r = config.temporal_correlation()?;
    let rho = config.spatial_correlation()?;
    let mut rng = rng_from_seed(config.seed);

    let h_k = sample_initial_channel(pdp, &mut rng);
    let h_next = evolve_channel(&h_k, r, &mut rng)?;
    let h_attacker = attacker_channel(&h_next, rho, config.theta, &mut rng)?;

    let csi_k = tagged(
        simulate_csi(&h_k, config.snr_db, ofdm, &mut rng)?,
        SourceTag::Legitimate,
    );
    let csi_next = tagged(
        simulate_csi(&h_next, config.snr_db, ofdm, &mut rng)?,
        SourceTag::Legitimate,
    );
    let csi_attacker = tagged(
        simulate_csi(&h_attacker, config.snr_db, ofdm, &mut rng)?,
        SourceTag::Attacker,
    );

    let provenance = Provenance::Synthetic(*config);
    Ok((
        LabeledPair {
            csi_a: csi_k.clone(),
            csi_b: csi_next,
            label: Label::Same,
            provenance,
        },
        LabeledPair {
            csi_a: csi_k,
            csi_b: csi_attacker,
            label: Label::Different,
            provenance,
        },
    ))
}

/// Cartesian training grid over models, SNRs and attacker distances.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingGrid {
    pub models: Vec<TgnModel>,
    pub snrs_db: Vec<f64>,
    pub dt_s: f64,
    pub v0: f64,
    pub wavelength: f64,
    pub distances_wavelengths: Vec<f64>,
    pub theta: f64,
    /// Pair couples per cell; each yields one `Same` and one `Different` pair.
    pub pairs_per_cell: usize,
    pub seed: u64,
}

impl Default for TrainingGrid {
    fn default() -> Self {
        Self {
            models: TgnModel::ALL.to_vec(),
            snrs_db: vec![
                5.0, 8.0, 10.0, 12.0, 13.0, 14.0, 15.0, 16.0, 17.0, 18.0, 19.0, 20.0, 50.0,
            ],
            dt_s: 3e-3,
            v0: 1.0,
            wavelength: wavelength_for(2.4e9),
            distances_wavelengths: vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0],
            theta: 1.0,
            pairs_per_cell: 20,
            seed: 0,
        }
    }
}

impl TrainingGrid {
    pub fn cell_count(&self) -> usize {
        self.models.len() * self.snrs_db.len() * self.distances_wavelengths.len()
    }

    fn cell(&self, index: usize) -> (TgnModel, f64, f64) {
        let nd = self.distances_wavelengths.len();
        let ns = self.snrs_db.len();
        let model = self.models[index / (ns * nd)];
        let snr = self.snrs_db[(index / nd) % ns];
        let d = self.distances_wavelengths[index % nd];
        (model, snr, d)
    }
}

/// Every combination of the grid, cells in model-major order. Each cell
/// derives its own seeds from `(seed, cell, pair)`, so the result does not
/// depend on the number of worker threads.
pub fn generate_training_grid(grid: &TrainingGrid) -> Result<Dataset> {
    if grid.cell_count() == 0 {
        return Err(Error::Usage("training grid has an empty axis".into()));
    }
    let ofdm = OfdmConfig::default();
    let pdps = grid
        .models
        .iter()
        .map(|&m| sampled_pdp(m, &ofdm).map(|p| (m, p)))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<Vec<LabeledPair>> = (0..grid.cell_count())
        .into_par_iter()
        .map(|cell| {
            let (model, snr_db, d) = grid.cell(cell);
            let pdp = &pdps
                .iter()
                .find(|(m, _)| *m == model)
                .expect("pdp per model")
                .1;
            let mut out = Vec::with_capacity(2 * grid.pairs_per_cell);
            for j in 0..grid.pairs_per_cell {
                let config = PairGenConfig {
                    model,
                    snr_db,
                    dt_s: grid.dt_s,
                    v0: grid.v0,
                    wavelength: grid.wavelength,
                    d_bm_wavelengths: d,
                    theta: grid.theta,
                    seed: derive_seed(grid.seed, &[cell as u64, j as u64]),
                };
                config.validate()?;
                let (same, different) = generate_pair_from(&config, &ofdm, pdp)?;
                out.push(same);
                out.push(different);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(Dataset::new(
        format!(
            "train;cells={};pairs_per_cell={}",
            grid.cell_count(),
            grid.pairs_per_cell
        ),
        cells.into_iter().flatten().collect(),
    ))
}

/// The single parameter varied across a family of test datasets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TestAxis {
    Snr,
    Interval,
    Distance,
}

impl TestAxis {
    pub fn key(self) -> &'static str {
        match self {
            TestAxis::Snr => "snr_db",
            TestAxis::Interval => "dt_ms",
            TestAxis::Distance => "d_bm",
        }
    }

    /// SNR in dB, interval in ms, distance in wavelengths.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            TestAxis::Snr => (0..12).map(|i| 2.0 * i as f64).collect(),
            TestAxis::Interval => (1..=9).map(|i| 3.0 * i as f64).collect(),
            TestAxis::Distance => vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0],
        }
    }
}

impl std::str::FromStr for TestAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr" | "snr_db" => Ok(TestAxis::Snr),
            "dt" | "interval" | "dt_ms" => Ok(TestAxis::Interval),
            "d" | "distance" | "d_bm" => Ok(TestAxis::Distance),
            _ => Err(Error::Usage(format!(
                "unknown test axis '{s}' (expected snr, dt or d)"
            ))),
        }
    }
}

/// Fixed settings of a test family; the chosen axis overrides one of them.
#[derive(Clone, Debug, PartialEq)]
pub struct TestGrid {
    pub model: TgnModel,
    pub snr_db: f64,
    pub dt_s: f64,
    pub v0: f64,
    pub wavelength: f64,
    pub d_bm_wavelengths: f64,
    pub theta: f64,
    /// Pair couples per dataset.
    pub pairs: usize,
    pub seed: u64,
    /// Axis values; `None` uses [`TestAxis::default_values`].
    pub values: Option<Vec<f64>>,
}

impl Default for TestGrid {
    fn default() -> Self {
        Self {
            model: TgnModel::B,
            snr_db: 5.0,
            dt_s: 3e-3,
            v0: 1.0,
            wavelength: wavelength_for(2.4e9),
            d_bm_wavelengths: 0.25,
            theta: 1.0,
            pairs: 500,
            seed: 0,
            values: None,
        }
    }
}

/// One dataset per value of exactly one axis.
///
/// Pair `j` of every dataset in the family uses the same seed, so settings
/// differ only in the varied parameter (common random numbers).
pub fn generate_test_grid(axes: &[TestAxis], grid: &TestGrid) -> Result<Vec<Dataset>> {
    let axis = match axes {
        [axis] => *axis,
        [] => {
            return Err(Error::Usage(
                "test grid needs exactly one varying axis, got none".into(),
            ))
        }
        _ => {
            return Err(Error::Usage(format!(
                "test grid varies exactly one axis per call, got {}",
                axes.len()
            )))
        }
    };
    let values = grid.values.clone().unwrap_or_else(|| axis.default_values());
    let ofdm = OfdmConfig::default();
    let pdp = sampled_pdp(grid.model, &ofdm)?;
    values
        .iter()
        .map(|&value| {
            let mut base = PairGenConfig {
                model: grid.model,
                snr_db: grid.snr_db,
                dt_s: grid.dt_s,
                v0: grid.v0,
                wavelength: grid.wavelength,
                d_bm_wavelengths: grid.d_bm_wavelengths,
                theta: grid.theta,
                seed: 0,
            };
            match axis {
                TestAxis::Snr => base.snr_db = value,
                TestAxis::Interval => base.dt_s = value * 1e-3,
                TestAxis::Distance => base.d_bm_wavelengths = value,
            }
            base.validate()?;
            let pairs: Vec<Vec<LabeledPair>> = (0..grid.pairs)
                .into_par_iter()
                .map(|j| {
                    let config = PairGenConfig {
                        seed: derive_seed(grid.seed, &[u64::from(grid.model.index()), j as u64]),
                        ..base
                    };
                    let (a, b) = generate_pair_from(&config, &ofdm, &pdp)?;
                    Ok(vec![a, b])
                })
                .collect::<Result<_>>()?;
            Ok(Dataset::new(
                format!("model={};{}={}", grid.model, axis.key(), value),
                pairs.into_iter().flatten().collect(),
            ))
        })
        .collect()
}
