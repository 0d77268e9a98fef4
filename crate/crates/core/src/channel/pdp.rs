use crate::{Error, Result, Scalar};

/// Per-tap delays and mean powers of a multipath channel.
///
/// Powers are normalized to unit total at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerDelayProfile<T> {
    tap_delays_ns: Vec<T>,
    tap_powers: Vec<T>,
}

impl<T: Scalar> PowerDelayProfile<T> {
    /// Builds a profile from delays (ns, strictly increasing) and linear powers.
    pub fn new(tap_delays_ns: Vec<T>, tap_powers: Vec<T>) -> Result<Self> {
        if tap_delays_ns.is_empty() {
            return Err(Error::domain("power delay profile needs at least one tap"));
        }
        if tap_delays_ns.len() != tap_powers.len() {
            return Err(Error::domain(format!(
                "{} delays but {} powers",
                tap_delays_ns.len(),
                tap_powers.len()
            )));
        }
        if tap_delays_ns
            .iter()
            .any(|d| !(*d >= T::zero()) || !d.is_finite())
        {
            return Err(Error::domain("tap delays must be finite and non-negative"));
        }
        if tap_delays_ns.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("tap delays must be strictly increasing"));
        }
        if tap_powers
            .iter()
            .any(|p| !(*p >= T::zero()) || !p.is_finite())
        {
            return Err(Error::domain("tap powers must be finite and non-negative"));
        }
        let total: T = tap_powers.iter().copied().sum();
        if !(total > T::zero()) {
            return Err(Error::domain("total tap power must be positive"));
        }
        let tap_powers = tap_powers.into_iter().map(|p| p / total).collect();
        Ok(Self {
            tap_delays_ns,
            tap_powers,
        })
    }

    /// Single-cluster exponential decay `exp(-τ / rms)` sampled every
    /// `tap_spacing_ns`, truncated once a tap falls 30 dB below the first.
    ///
    /// The RMS spread of the truncated discrete profile approximates
    /// `rms_delay_ns`; it is exact only in the continuous limit.
    pub fn exponential(rms_delay_ns: T, tap_spacing_ns: T) -> Result<Self> {
        if !(rms_delay_ns > T::zero()) || !(tap_spacing_ns > T::zero()) {
            return Err(Error::domain("RMS delay and tap spacing must be positive"));
        }
        let floor = T::lit(1e-3);
        let mut delays = Vec::new();
        let mut powers = Vec::new();
        for k in 0.. {
            let tau = T::from_usize_lossy(k) * tap_spacing_ns;
            let p = (-tau / rms_delay_ns).exp();
            if p < floor {
                break;
            }
            delays.push(tau);
            powers.push(p);
        }
        Self::new(delays, powers)
    }

    pub fn len(&self) -> usize {
        self.tap_powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tap_powers.is_empty()
    }

    pub fn tap_delays_ns(&self) -> &[T] {
        &self.tap_delays_ns
    }

    /// Per-tap variance σ²(l).
    pub fn tap_powers(&self) -> &[T] {
        &self.tap_powers
    }

    pub fn mean_delay_ns(&self) -> T {
        self.tap_delays_ns
            .iter()
            .zip(&self.tap_powers)
            .map(|(&d, &p)| d * p)
            .sum()
    }

    pub fn rms_delay_ns(&self) -> T {
        let mean = self.mean_delay_ns();
        let second: T = self
            .tap_delays_ns
            .iter()
            .zip(&self.tap_powers)
            .map(|(&d, &p)| d * d * p)
            .sum();
        (second - mean * mean).max(T::zero()).sqrt()
    }

    /// Rounds every delay to the nearest multiple of `sample_ns`, summing the
    /// powers of taps that land on the same sample.
    pub fn discretize(&self, sample_ns: T) -> Result<Self> {
        if !(sample_ns > T::zero()) {
            return Err(Error::domain("sample period must be positive"));
        }
        let mut delays: Vec<T> = Vec::new();
        let mut powers: Vec<T> = Vec::new();
        for (&d, &p) in self.tap_delays_ns.iter().zip(&self.tap_powers) {
            let snapped = (d / sample_ns).round() * sample_ns;
            match delays.last() {
                Some(&last) if last == snapped => *powers.last_mut().unwrap() += p,
                _ => {
                    delays.push(snapped);
                    powers.push(p);
                }
            }
        }
        Self::new(delays, powers)
    }

    /// Integer sample index of each tap, if every delay sits on the
    /// `sample_ns` grid (within 1e-6 ns).
    pub fn sample_delays(&self, sample_ns: T) -> Result<Vec<usize>> {
        let tol = T::lit(1e-6);
        self.tap_delays_ns
            .iter()
            .map(|&d| {
                let idx = (d / sample_ns).round();
                if (idx * sample_ns - d).abs() > tol {
                    Err(Error::Precondition(format!(
                        "tap delay {d} ns is not a multiple of the {sample_ns} ns sample period; discretize first"
                    )))
                } else {
                    Ok(idx.to_usize().expect("non-negative index"))
                }
            })
            .collect()
    }
}
