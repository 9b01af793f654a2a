//! Seeded randomness with a pinned bit-stream.
//!
//! Everything random in this crate flows through [`SeededRng`], a thin wrapper
//! over the ChaCha8 stream cipher. The mapping from the raw word stream to
//! floats is spelled out here so that coordinate-selection sequences and
//! generated problem instances are reproducible from the seed alone:
//!
//! * `uniform()` takes one 64-bit word `w` and returns `(w >> 11) * 2^-53`,
//!   i.e. a uniform double in `[0, 1)` built from the top 53 bits.
//! * `standard_normal()` consumes two uniforms via the Box-Muller transform
//!   and caches the second deviate.
//! * `draw_index(cum)` performs inverse-CDF sampling against a cumulative
//!   probability vector, breaking ties toward the lower index.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Clone, Debug)]
pub struct SeededRng {
    inner: ChaCha8Rng,
    cached_normal: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            cached_normal: None,
        }
    }

    /// Uniform double in `[0, 1)` from the top 53 bits of one stream word.
    pub fn uniform(&mut self) -> f64 {
        let w = self.inner.next_u64();
        (w >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal deviate (Box-Muller).
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.cached_normal.take() {
            return z;
        }
        // Reject u1 = 0 so the log stays finite.
        let mut u1 = self.uniform();
        while u1 == 0.0 {
            u1 = self.uniform();
        }
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.cached_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn normal_vector(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.standard_normal()).collect()
    }

    /// Inverse-CDF draw against a cumulative distribution.
    ///
    /// `cum` must be nondecreasing with final entry 1 (up to rounding).
    /// Returns the smallest `i` with `u < cum[i]`, so ties break toward the
    /// lower index.
    pub fn draw_index(&mut self, cum: &[f64]) -> usize {
        let u = self.uniform();
        for (i, &c) in cum.iter().enumerate() {
            if u < c {
                return i;
            }
        }
        cum.len() - 1
    }
}
