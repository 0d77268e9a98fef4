//! Rayleigh channel realizations under TGn power delay profiles, evolved
//! with first-order Gauss-Markov recursions in time and across space.

mod doppler;
mod fading;
mod pdp;
mod tgn;

pub use doppler::{
    autocorrelation, doppler_spread, equivalent_interval, spatial_correlation, DopplerParams,
    BELL_CONSTANT,
};
pub use fading::{
    attacker_channel, evolve_channel, sample_initial_channel, ChannelState, SpatialParams,
};
pub use pdp::PowerDelayProfile;
pub use tgn::{build_pdp, TgnModel};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Carrier wavelength in metres.
pub fn wavelength_for(carrier_hz: f64) -> f64 {
    SPEED_OF_LIGHT / carrier_hz
}
