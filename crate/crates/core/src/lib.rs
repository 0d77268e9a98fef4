//! Physical-layer authentication toolkit.
//!
//! Generates correlated-fading CSI pairs for a legitimate transmitter and a
//! nearby impersonator, trains a weight-shared Siamese similarity network on
//! them and evaluates detectors with ROC/AUC metrics.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`). Storage
//! formats are fixed to little-endian `f32`, so the aliases below name the
//! concrete types most callers want.

pub mod channel;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod models;
pub mod ofdm;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use num_complex::Complex;

pub type ChannelState32 = channel::ChannelState<f32>;
pub type ChannelState64 = channel::ChannelState<f64>;
pub type PowerDelayProfile64 = channel::PowerDelayProfile<f64>;
pub type CsiVector32 = ofdm::CsiVector<f32>;
pub type CsiVector64 = ofdm::CsiVector<f64>;
pub type SiameseWeights32 = models::SiameseWeights<f32>;
pub type SiameseWeights64 = models::SiameseWeights<f64>;
pub type RocCurve64 = eval::RocCurve<f64>;
