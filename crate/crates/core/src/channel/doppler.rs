use crate::{Error, Result, Scalar};

/// Shape constant of the Bell Doppler spectrum used for indoor TGn channels.
pub const BELL_CONSTANT: f64 = 9.0;

/// Terminal motion parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DopplerParams<T> {
    /// Terminal speed, m/s.
    pub speed: T,
    /// Carrier wavelength, m.
    pub wavelength: T,
    /// Bell-shape constant `A`.
    pub bell_constant: T,
}

impl<T: Scalar> DopplerParams<T> {
    pub fn new(speed: T, wavelength: T) -> Result<Self> {
        // validates through doppler_spread
        doppler_spread(speed, wavelength)?;
        Ok(Self {
            speed,
            wavelength,
            bell_constant: T::lit(BELL_CONSTANT),
        })
    }

    pub fn doppler_spread(&self) -> T {
        self.speed / self.wavelength
    }

    /// Temporal correlation after `dt` seconds.
    pub fn correlation_after(&self, dt: T) -> Result<T> {
        autocorrelation(self.doppler_spread(), dt, self.bell_constant)
    }
}

/// `f_d = v0 / λ`.
pub fn doppler_spread<T: Scalar>(speed: T, wavelength: T) -> Result<T> {
    if !(wavelength > T::zero()) || !wavelength.is_finite() {
        return Err(Error::domain(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    if !(speed >= T::zero()) || !speed.is_finite() {
        return Err(Error::domain(format!(
            "speed must be non-negative, got {speed}"
        )));
    }
    Ok(speed / wavelength)
}

/// Autocorrelation of a Bell-spectrum channel: `exp(-2π f_d Δt / √A)`.
pub fn autocorrelation<T: Scalar>(doppler: T, dt: T, bell_constant: T) -> Result<T> {
    if !(dt >= T::zero()) {
        return Err(Error::domain(format!(
            "time lag must be non-negative, got {dt}"
        )));
    }
    if !(doppler >= T::zero()) {
        return Err(Error::domain(format!(
            "Doppler spread must be non-negative, got {doppler}"
        )));
    }
    if !(bell_constant > T::zero()) {
        return Err(Error::domain(format!(
            "Bell constant must be positive, got {bell_constant}"
        )));
    }
    Ok((-T::TAU() * doppler * dt / bell_constant.sqrt()).exp())
}

/// Time a terminal moving at `f_d·λ` m/s needs to cover `distance`.
pub fn equivalent_interval<T: Scalar>(distance: T, doppler: T, wavelength: T) -> Result<T> {
    if !(doppler > T::zero()) {
        return Err(Error::domain(format!(
            "Doppler spread must be positive, got {doppler}"
        )));
    }
    if !(wavelength > T::zero()) {
        return Err(Error::domain(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    if !(distance >= T::zero()) {
        return Err(Error::domain(format!(
            "distance must be non-negative, got {distance}"
        )));
    }
    Ok(distance / (doppler * wavelength))
}

/// Correlation between two transmitters `distance` metres apart.
///
/// Defined as 1 for co-located transmitters, including the stationary case.
pub fn spatial_correlation<T: Scalar>(
    distance: T,
    doppler: T,
    wavelength: T,
    bell_constant: T,
) -> Result<T> {
    if distance == T::zero() {
        return Ok(T::one());
    }
    let dt = equivalent_interval(distance, doppler, wavelength)?;
    autocorrelation(doppler, dt, bell_constant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn doppler_spread_examples() {
        assert_eq!(doppler_spread(1.0, 0.125).unwrap(), 8.0);
        assert_eq!(doppler_spread(0.0, 0.125).unwrap(), 0.0);
        assert_eq!(doppler_spread(1.0, 1.0).unwrap(), 1.0);
        assert!(doppler_spread(1.0, 0.0).is_err());
        assert!(doppler_spread(1.0, -0.1).is_err());
    }

    #[test]
    fn autocorrelation_examples() {
        assert_eq!(autocorrelation(8.0, 0.0, 9.0).unwrap(), 1.0);
        // exp(-2π·8·0.003/3) evaluated independently: exp(-0.016π)
        let expected = (-0.016f64 * std::f64::consts::PI).exp();
        assert_abs_diff_eq!(expected, 0.950977, epsilon = 1e-6);
        assert_abs_diff_eq!(
            autocorrelation(8.0, 0.003, 9.0).unwrap(),
            0.950977,
            epsilon = 1e-6
        );
        assert_eq!(autocorrelation(0.0, 1.0, 9.0).unwrap(), 1.0);
        assert!(autocorrelation(8.0, -1e-3, 9.0).is_err());
    }

    #[test]
    fn equivalent_interval_examples() {
        assert_abs_diff_eq!(
            equivalent_interval(0.03125, 8.0, 0.125).unwrap(),
            0.03125,
            epsilon = 1e-15
        );
        assert_eq!(equivalent_interval(0.0, 8.0, 0.125).unwrap(), 0.0);
        assert_abs_diff_eq!(
            equivalent_interval(0.125, 8.0, 0.125).unwrap(),
            0.125,
            epsilon = 1e-15
        );
        assert!(equivalent_interval(1.0, 0.0, 0.125).is_err());
        assert!(equivalent_interval(1.0, 8.0, 0.0).is_err());
    }

    #[test]
    fn spatial_correlation_depends_only_on_distance_in_wavelengths() {
        let wl = 0.125;
        for v0 in [0.25, 1.0, 3.0] {
            let fd = doppler_spread(v0, wl).unwrap();
            let rho = spatial_correlation(0.25 * wl, fd, wl, BELL_CONSTANT).unwrap();
            assert_abs_diff_eq!(
                rho,
                (-std::f64::consts::TAU * 0.25 / 3.0).exp(),
                epsilon = 1e-12
            );
        }
        assert_eq!(
            spatial_correlation(0.0, 0.0, wl, BELL_CONSTANT).unwrap(),
            1.0
        );
    }

    #[test]
    fn params_match_free_functions() {
        let p = DopplerParams::new(1.0, 0.125).unwrap();
        assert_eq!(p.bell_constant, 9.0);
        assert_eq!(p.doppler_spread(), 8.0);
        assert_eq!(
            p.correlation_after(0.003).unwrap(),
            autocorrelation(8.0, 0.003, 9.0).unwrap()
        );
    }

    proptest::proptest! {
        #[test]
        fn autocorrelation_is_a_semigroup(fd in 0.0f64..50.0, t1 in 0.0f64..0.5, t2 in 0.0f64..0.5) {
            let joint = autocorrelation(fd, t1 + t2, 9.0).unwrap();
            let split = autocorrelation(fd, t1, 9.0).unwrap() * autocorrelation(fd, t2, 9.0).unwrap();
            proptest::prop_assert!((joint - split).abs() <= 1e-12);
            proptest::prop_assert!(joint > 0.0 && joint <= 1.0);
        }
    }
}
