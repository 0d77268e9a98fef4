use std::sync::Arc;

use num_complex::Complex;
use rand::Rng;

use crate::rng::complex_gaussian;
use crate::{Error, Result, Scalar};

use super::PowerDelayProfile;

/// One channel impulse response realization with the profile it was drawn from.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelState<T> {
    taps: Vec<Complex<T>>,
    pdp: Arc<PowerDelayProfile<T>>,
}

impl<T: Scalar> ChannelState<T> {
    pub fn new(taps: Vec<Complex<T>>, pdp: Arc<PowerDelayProfile<T>>) -> Result<Self> {
        if taps.len() != pdp.len() {
            return Err(Error::domain(format!(
                "{} taps for a {}-tap profile",
                taps.len(),
                pdp.len()
            )));
        }
        Ok(Self { taps, pdp })
    }

    pub fn taps(&self) -> &[Complex<T>] {
        &self.taps
    }

    pub fn pdp(&self) -> &Arc<PowerDelayProfile<T>> {
        &self.pdp
    }

    fn with_taps(&self, taps: Vec<Complex<T>>) -> Self {
        Self {
            taps,
            pdp: Arc::clone(&self.pdp),
        }
    }
}

/// Attacker placement relative to the legitimate transmitter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialParams<T> {
    /// Distance between the two transmitters, m.
    pub distance: T,
    /// Ratio of legitimate to attacker tap variance.
    pub theta: T,
}

impl<T: Scalar> SpatialParams<T> {
    pub fn new(distance: T, theta: T) -> Result<Self> {
        if !(distance >= T::zero()) {
            return Err(Error::domain(format!(
                "distance must be non-negative, got {distance}"
            )));
        }
        if !(theta > T::zero()) {
            return Err(Error::domain(format!(
                "theta must be positive, got {theta}"
            )));
        }
        Ok(Self { distance, theta })
    }
}

/// Independent CN(0, σ²(l)) draw for every tap.
pub fn sample_initial_channel<T: Scalar, R: Rng + ?Sized>(
    pdp: &Arc<PowerDelayProfile<T>>,
    rng: &mut R,
) -> ChannelState<T> {
    let taps = pdp
        .tap_powers()
        .iter()
        .map(|&p| complex_gaussian(rng, p))
        .collect();
    ChannelState {
        taps,
        pdp: Arc::clone(pdp),
    }
}

/// One Gauss-Markov step `h' = R·h + √(1-R²)·ω`, ω ~ CN(0, σ²(l)).
pub fn evolve_channel<T: Scalar, R: Rng + ?Sized>(
    state: &ChannelState<T>,
    correlation: T,
    rng: &mut R,
) -> Result<ChannelState<T>> {
    if !(correlation >= T::zero() && correlation <= T::one()) {
        return Err(Error::domain(format!(
            "correlation must lie in [0, 1], got {correlation}"
        )));
    }
    let innovation = (T::one() - correlation * correlation).sqrt();
    let taps = state
        .taps
        .iter()
        .zip(state.pdp.tap_powers())
        .map(|(&h, &p)| h * correlation + complex_gaussian(rng, p) * innovation)
        .collect();
    Ok(state.with_taps(taps))
}

/// Attacker channel `(ρ·h + √(1-ρ²)·ω) / √Θ`, ω ~ CN(0, σ²(l)).
pub fn attacker_channel<T: Scalar, R: Rng + ?Sized>(
    state: &ChannelState<T>,
    rho: T,
    theta: T,
    rng: &mut R,
) -> Result<ChannelState<T>> {
    if !(theta > T::zero()) {
        return Err(Error::domain(format!(
            "theta must be positive, got {theta}"
        )));
    }
    if !(rho >= T::zero() && rho <= T::one()) {
        return Err(Error::domain(format!(
            "spatial correlation must lie in [0, 1], got {rho}"
        )));
    }
    let innovation = (T::one() - rho * rho).sqrt();
    let scale = theta.sqrt().recip();
    let taps = state
        .taps
        .iter()
        .zip(state.pdp.tap_powers())
        .map(|(&h, &p)| (h * rho + complex_gaussian(rng, p) * innovation) * scale)
        .collect();
    Ok(state.with_taps(taps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn unit_pdp() -> Arc<PowerDelayProfile<f64>> {
        Arc::new(PowerDelayProfile::new(vec![0.0], vec![1.0]).unwrap())
    }

    /// Sample correlation of two real sequences.
    fn corr(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        sxy / (sxx * syy).sqrt()
    }

    #[test]
    fn initial_tap_power_moment() {
        let pdp = unit_pdp();
        let mut rng = rng_from_seed(11);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| sample_initial_channel(&pdp, &mut rng).taps()[0].norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn zero_power_tap_is_exact_zero() {
        let pdp = Arc::new(PowerDelayProfile::new(vec![0.0, 50.0], vec![1.0, 0.0]).unwrap());
        let mut rng = rng_from_seed(2);
        let h = sample_initial_channel(&pdp, &mut rng);
        assert_eq!(h.taps()[1], Complex::new(0.0, 0.0));
    }

    #[test]
    fn sampling_is_deterministic() {
        let pdp = Arc::new(crate::channel::build_pdp::<f64>(
            crate::channel::TgnModel::D,
        ));
        let a = sample_initial_channel(&pdp, &mut rng_from_seed(99));
        let b = sample_initial_channel(&pdp, &mut rng_from_seed(99));
        assert_eq!(a, b);
    }

    #[test]
    fn evolve_with_unit_correlation_is_identity() {
        let pdp = Arc::new(crate::channel::build_pdp::<f64>(
            crate::channel::TgnModel::C,
        ));
        let mut rng = rng_from_seed(5);
        let h = sample_initial_channel(&pdp, &mut rng);
        let h2 = evolve_channel(&h, 1.0, &mut rng).unwrap();
        assert_eq!(h.taps(), h2.taps());
    }

    #[test]
    fn evolve_rejects_out_of_range() {
        let pdp = unit_pdp();
        let mut rng = rng_from_seed(5);
        let h = sample_initial_channel(&pdp, &mut rng);
        assert!(evolve_channel(&h, 1.5, &mut rng).is_err());
        assert!(evolve_channel(&h, -0.1, &mut rng).is_err());
    }

    #[test]
    fn evolve_zero_correlation_decorrelates() {
        let pdp = unit_pdp();
        let mut rng = rng_from_seed(6);
        let n = 100_000;
        let (mut xs, mut ys) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            let h = sample_initial_channel(&pdp, &mut rng);
            let h2 = evolve_channel(&h, 0.0, &mut rng).unwrap();
            xs.push(h.taps()[0].re);
            ys.push(h2.taps()[0].re);
        }
        assert!(corr(&xs, &ys).abs() < 0.01);
    }

    #[test]
    fn evolve_preserves_variance() {
        let pdp = unit_pdp();
        let mut rng = rng_from_seed(7);
        let n = 100_000;
        let var: f64 = (0..n)
            .map(|_| {
                let h = sample_initial_channel(&pdp, &mut rng);
                evolve_channel(&h, 0.95, &mut rng).unwrap().taps()[0].norm_sqr()
            })
            .sum::<f64>()
            / n as f64;
        assert!((var - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn attacker_identity_when_colocated() {
        let pdp = Arc::new(crate::channel::build_pdp::<f64>(
            crate::channel::TgnModel::E,
        ));
        let mut rng = rng_from_seed(8);
        let h = sample_initial_channel(&pdp, &mut rng);
        let m = attacker_channel(&h, 1.0, 1.0, &mut rng).unwrap();
        assert_eq!(h.taps(), m.taps());
    }

    #[test]
    fn attacker_rejects_bad_theta() {
        let pdp = unit_pdp();
        let mut rng = rng_from_seed(8);
        let h = sample_initial_channel(&pdp, &mut rng);
        assert!(attacker_channel(&h, 0.5, 0.0, &mut rng).is_err());
        assert!(attacker_channel(&h, 0.5, -1.0, &mut rng).is_err());
        assert!(SpatialParams::new(-1.0, 1.0).is_err());
        assert!(SpatialParams::new(0.0, 0.0).is_err());
    }

    #[test]
    fn attacker_independent_when_uncorrelated() {
        let pdp = unit_pdp();
        let mut rng = rng_from_seed(9);
        let n = 100_000;
        let (mut xs, mut ys) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            let h = sample_initial_channel(&pdp, &mut rng);
            let m = attacker_channel(&h, 0.0, 1.0, &mut rng).unwrap();
            xs.push(h.taps()[0].re);
            ys.push(m.taps()[0].re);
        }
        assert!(corr(&xs, &ys).abs() < 0.01);
    }

    #[test]
    fn attacker_variance_scaled_by_theta() {
        let pdp = unit_pdp();
        let mut rng = rng_from_seed(10);
        let n = 100_000;
        let var: f64 = (0..n)
            .map(|_| {
                let h = sample_initial_channel(&pdp, &mut rng);
                attacker_channel(&h, 0.5, 4.0, &mut rng).unwrap().taps()[0].norm_sqr()
            })
            .sum::<f64>()
            / n as f64;
        assert!((var - 0.25).abs() < 0.25 * 0.02, "{var}");
    }

    #[test]
    fn state_rejects_length_mismatch() {
        let pdp = unit_pdp();
        assert!(ChannelState::new(vec![Complex::new(1.0, 0.0); 2], pdp).is_err());
    }
}
