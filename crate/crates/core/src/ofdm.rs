//! Frequency-domain 802.11 legacy LTF transmission and least-squares
//! channel estimation.
//!
//! Reception is simulated directly on the occupied bins as
//! `Y[m] = X[m]·H[m] + Z[m]`, which matches time-domain filtering whenever
//! the channel is shorter than the cyclic prefix.

use num_complex::Complex;
use rand::Rng;

use crate::channel::{wavelength_for, ChannelState};
use crate::rng::complex_gaussian;
use crate::{Error, Result, Scalar};

/// FFT size of the 20 MHz legacy mode.
pub const FFT_SIZE: usize = 64;
/// Occupied LTF subcarriers.
pub const OCCUPIED: usize = 52;
/// Cyclic prefix length in samples (0.8 µs at 20 MHz).
pub const CYCLIC_PREFIX: usize = 16;

/// Legacy L-LTF values on subcarriers -26..=26 with the DC entry removed.
const LEGACY_LTF: [i8; OCCUPIED] = [
    1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, //
    1, -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1,
];

/// How the noise variance is tied to the requested SNR.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SnrReference {
    /// Relative to the mean received power of this realization.
    #[default]
    RxPower,
    /// Relative to a unit-power transmit symbol through a unit-gain channel.
    UnitTx,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OfdmConfig {
    pub fft_size: usize,
    pub occupied: usize,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub snr_reference: SnrReference,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self {
            fft_size: FFT_SIZE,
            occupied: OCCUPIED,
            carrier_hz: 2.4e9,
            bandwidth_hz: 20e6,
            snr_reference: SnrReference::RxPower,
        }
    }
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fft_size != FFT_SIZE || self.occupied != OCCUPIED {
            return Err(Error::Usage(format!(
                "only the 64-point / 52-subcarrier legacy mode is supported, got {}/{}",
                self.fft_size, self.occupied
            )));
        }
        if !(self.carrier_hz > 0.0) || !(self.bandwidth_hz > 0.0) {
            return Err(Error::domain("carrier and bandwidth must be positive"));
        }
        Ok(())
    }

    pub fn sample_period_ns(&self) -> f64 {
        1e9 / self.bandwidth_hz
    }

    pub fn wavelength(&self) -> f64 {
        wavelength_for(self.carrier_hz)
    }
}

/// DFT index of every occupied subcarrier, ordered -26..=-1, 1..=26.
pub fn occupied_bins() -> [usize; OCCUPIED] {
    let mut bins = [0usize; OCCUPIED];
    let half = (OCCUPIED / 2) as isize;
    let subcarriers = (-half..0).chain(1..=half);
    for (slot, k) in bins.iter_mut().zip(subcarriers) {
        *slot = k.rem_euclid(FFT_SIZE as isize) as usize;
    }
    bins
}

/// Known ±1 training values per occupied subcarrier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LtfSymbol {
    values: Vec<i8>,
}

impl LtfSymbol {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if values.iter().any(|v| *v != 1 && *v != -1) {
            return Err(Error::domain("LTF entries must be +1 or -1"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn standard_ltf() -> LtfSymbol {
    LtfSymbol {
        values: LEGACY_LTF.to_vec(),
    }
}

/// Who transmitted the packet a CSI estimate came from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SourceTag {
    #[default]
    Unknown,
    Legitimate,
    Attacker,
    Mac([u8; 6]),
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CsiMeta {
    pub snr_db: Option<f64>,
    pub timestamp: Option<f64>,
    pub source: SourceTag,
    /// The channel extended past the cyclic prefix.
    pub exceeds_cyclic_prefix: bool,
    /// Noise was referenced to a zero-power received signal.
    pub zero_power_signal: bool,
}

/// Per-subcarrier channel estimates from one received LTF.
#[derive(Clone, Debug, PartialEq)]
pub struct CsiVector<T> {
    pub estimates: Vec<Complex<T>>,
    pub meta: CsiMeta,
}

impl<T: Scalar> CsiVector<T> {
    pub fn new(estimates: Vec<Complex<T>>) -> Self {
        Self {
            estimates,
            meta: CsiMeta::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<T> {
        self.estimates.iter().map(|h| h.norm()).collect()
    }

    pub fn cast<U: Scalar>(&self) -> CsiVector<U> {
        CsiVector {
            estimates: self
                .estimates
                .iter()
                .map(|h| Complex::new(U::lit(h.re.as_f64()), U::lit(h.im.as_f64())))
                .collect(),
            meta: self.meta,
        }
    }
}

/// Channel response on the occupied bins.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyResponse<T> {
    pub values: Vec<Complex<T>>,
    /// Some tap lies beyond the cyclic prefix, so the frequency-domain
    /// model is only approximate for this realization.
    pub exceeds_cyclic_prefix: bool,
}

fn twiddle<T: Scalar>(bin: usize, delay: usize) -> Complex<T> {
    // reduce the phase index first so the angle stays in [0, 2π)
    let k = (bin * delay) % FFT_SIZE;
    let angle = -T::TAU() * T::from_usize_lossy(k) / T::from_usize_lossy(FFT_SIZE);
    Complex::new(angle.cos(), angle.sin())
}

fn tap_samples<T: Scalar>(state: &ChannelState<T>, config: &OfdmConfig) -> Result<Vec<usize>> {
    config.validate()?;
    let delays = state
        .pdp()
        .sample_delays(T::lit(config.sample_period_ns()))?;
    if let Some(&d) = delays.iter().find(|&&d| d >= config.fft_size) {
        return Err(Error::Precondition(format!(
            "tap at sample delay {d} exceeds the {}-point transform",
            config.fft_size
        )));
    }
    Ok(delays)
}

/// `H[m] = Σ_l h[l]·exp(-j2π·m·l/M')` at every DFT bin `0..M'`.
pub fn full_frequency_response<T: Scalar>(
    state: &ChannelState<T>,
    config: &OfdmConfig,
) -> Result<Vec<Complex<T>>> {
    let delays = tap_samples(state, config)?;
    Ok((0..config.fft_size)
        .map(|m| {
            delays
                .iter()
                .zip(state.taps())
                .map(|(&l, &h)| h * twiddle::<T>(m, l))
                .sum()
        })
        .collect())
}

/// Channel frequency response restricted to the occupied subcarriers.
pub fn channel_frequency_response<T: Scalar>(
    state: &ChannelState<T>,
    config: &OfdmConfig,
) -> Result<FrequencyResponse<T>> {
    let delays = tap_samples(state, config)?;
    let values = occupied_bins()
        .iter()
        .map(|&m| {
            delays
                .iter()
                .zip(state.taps())
                .map(|(&l, &h)| h * twiddle::<T>(m, l))
                .sum()
        })
        .collect();
    let exceeds_cyclic_prefix = delays.iter().any(|&d| d > CYCLIC_PREFIX);
    Ok(FrequencyResponse {
        values,
        exceeds_cyclic_prefix,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AwgnOutput<T> {
    pub samples: Vec<Complex<T>>,
    pub noise_variance: T,
    /// The input carried no power, so unit noise variance was used.
    pub zero_power_signal: bool,
}

fn mean_power<T: Scalar>(signal: &[Complex<T>]) -> T {
    signal.iter().map(|s| s.norm_sqr()).sum::<T>() / T::from_usize_lossy(signal.len())
}

/// Adds complex white Gaussian noise with the given variance.
pub fn add_noise<T: Scalar, R: Rng + ?Sized>(
    signal: &[Complex<T>],
    noise_variance: T,
    rng: &mut R,
) -> Vec<Complex<T>> {
    signal
        .iter()
        .map(|&s| s + complex_gaussian(rng, noise_variance))
        .collect()
}

/// Adds noise so that mean signal power over noise variance equals
/// `10^(snr_db/10)`. `f64::INFINITY` means noiseless and draws nothing.
pub fn add_awgn<T: Scalar, R: Rng + ?Sized>(
    signal: &[Complex<T>],
    snr_db: f64,
    rng: &mut R,
) -> Result<AwgnOutput<T>> {
    if signal.is_empty() {
        return Err(Error::domain("cannot add noise to an empty signal"));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::domain(format!("invalid SNR {snr_db} dB")));
    }
    if snr_db == f64::INFINITY {
        return Ok(AwgnOutput {
            samples: signal.to_vec(),
            noise_variance: T::zero(),
            zero_power_signal: false,
        });
    }
    let power = mean_power(signal);
    let zero_power_signal = power == T::zero();
    let noise_variance = if zero_power_signal {
        T::one()
    } else {
        power / T::lit(10f64.powf(snr_db / 10.0))
    };
    Ok(AwgnOutput {
        samples: add_noise(signal, noise_variance, rng),
        noise_variance,
        zero_power_signal,
    })
}

/// `Ĥ[m] = Y[m] / X[m]`.
pub fn ls_estimate<T: Scalar>(received: &[Complex<T>], ltf: &LtfSymbol) -> Result<CsiVector<T>> {
    if received.len() != ltf.len() {
        return Err(Error::domain(format!(
            "{} received bins for a {}-entry training symbol",
            received.len(),
            ltf.len()
        )));
    }
    let estimates = received
        .iter()
        .zip(ltf.values())
        .map(|(&y, &x)| y / T::lit(f64::from(x)))
        .collect();
    Ok(CsiVector::new(estimates))
}

/// Channel response, LTF modulation, AWGN and LS estimation in one step.
pub fn simulate_csi<T: Scalar, R: Rng + ?Sized>(
    state: &ChannelState<T>,
    snr_db: f64,
    config: &OfdmConfig,
    rng: &mut R,
) -> Result<CsiVector<T>> {
    let response = channel_frequency_response(state, config)?;
    let ltf = standard_ltf();
    let transmitted: Vec<Complex<T>> = response
        .values
        .iter()
        .zip(ltf.values())
        .map(|(&h, &x)| h * T::lit(f64::from(x)))
        .collect();
    let noisy = match config.snr_reference {
        SnrReference::RxPower => add_awgn(&transmitted, snr_db, rng)?,
        SnrReference::UnitTx => {
            if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
                return Err(Error::domain(format!("invalid SNR {snr_db} dB")));
            }
            if snr_db == f64::INFINITY {
                AwgnOutput {
                    samples: transmitted,
                    noise_variance: T::zero(),
                    zero_power_signal: false,
                }
            } else {
                let variance = T::lit(10f64.powf(-snr_db / 10.0));
                AwgnOutput {
                    samples: add_noise(&transmitted, variance, rng),
                    noise_variance: variance,
                    zero_power_signal: false,
                }
            }
        }
    };
    let mut csi = ls_estimate(&noisy.samples, &ltf)?;
    csi.meta.snr_db = Some(snr_db);
    csi.meta.exceeds_cyclic_prefix = response.exceeds_cyclic_prefix;
    csi.meta.zero_power_signal = noisy.zero_power_signal;
    Ok(csi)
}
