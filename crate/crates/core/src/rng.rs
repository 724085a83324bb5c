//! Deterministic random streams.
//!
//! Every stochastic stage (channel drops, sensor noise) draws from a
//! [`SeededRng`] built from an explicit `u64` seed. Uniform and Gaussian
//! variates are derived here by hand from the raw ChaCha output instead of
//! going through distribution adapters, so the byte streams produced by a
//! given seed cannot shift underneath us when dependency internals change.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// SplitMix64 step, used to derive independent sub-seeds (for example one
/// noise stream per frame index) from a single run seed.
#[inline]
pub fn split_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic generator with explicit seeding.
#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
    /// Cached second Box-Muller variate.
    spare: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    #[inline]
    pub fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision: take the top 53 bits
    /// of one `u64` draw and scale by 2^-53.
    #[inline]
    pub fn uniform_f64(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        (self.inner.next_u64() >> 11) as f64 * SCALE
    }

    /// Standard normal variate via the Box-Muller transform. Variates are
    /// produced in pairs; the second is cached for the next call.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 must be strictly positive for the log.
        let mut u1 = self.uniform_f64();
        while u1 == 0.0 {
            u1 = self.uniform_f64();
        }
        let u2 = self.uniform_f64();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * core::f64::consts::PI * u2;
        self.spare = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }

    /// Bernoulli trial with success probability `p`.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform_f64() < p
    }
}
