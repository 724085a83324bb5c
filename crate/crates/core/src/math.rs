//! Small numeric helpers shared by the kernels.
//!
//! All transcendental math goes through `libm` so results are bit-identical
//! across platforms and independent of the host's libc.

/// Round half away from zero, the convention used everywhere a real value
/// is quantized back to integer samples.
#[inline]
pub fn round_half_away(x: f64) -> f64 {
    libm::round(x)
}

/// Quantize a real sample to u8 with saturation.
#[inline]
pub fn quantize_u8(x: f64) -> u8 {
    let r = libm::round(x);
    if r <= 0.0 {
        0
    } else if r >= 255.0 {
        255
    } else {
        r as u8
    }
}

/// Pairwise (cascade) summation. Order depends only on the slice length, so
/// accumulation is bit-stable regardless of how the caller chunks work.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Kahan compensated accumulator for long reductions (metric means).
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}
