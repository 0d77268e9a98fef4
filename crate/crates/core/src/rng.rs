//! Seeded randomness: the random source type, child-seed derivation and
//! Box-Muller complex Gaussian sampling.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Scalar;

/// Random source used throughout the crate.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a path of indices.
///
/// Children depend only on `(master, path)`, never on evaluation order, so
/// parallel generation is reproducible for any worker count.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &i| {
        splitmix64(acc ^ splitmix64(i))
    })
}

/// Two independent standard normals from one Box-Muller transform.
pub fn standard_normal_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    // gen::<f64>() is in [0, 1); shift to (0, 1] so ln never sees zero
    let u1 = 1.0 - rng.gen::<f64>();
    let u2 = rng.gen::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let phase = std::f64::consts::TAU * u2;
    (r * phase.cos(), r * phase.sin())
}

/// Draws from CN(0, variance): each of re/im is N(0, variance/2).
///
/// Always consumes two uniforms, so the stream position is independent of
/// the variance. A zero variance yields exactly `0 + 0j`.
pub fn complex_gaussian<T: Scalar, R: Rng + ?Sized>(rng: &mut R, variance: T) -> Complex<T> {
    let (a, b) = standard_normal_pair(rng);
    if variance == T::zero() {
        return Complex::new(T::zero(), T::zero());
    }
    let sd = (variance / T::lit(2.0)).sqrt();
    Complex::new(T::lit(a) * sd, T::lit(b) * sd)
}
