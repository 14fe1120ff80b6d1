//! Seeded random streams and the samplers used by the path generators.
//!
//! All randomness in the crate flows through [`Stream`]s derived from a single
//! 64-bit master seed by a counter-based split: substream `k` of master seed
//! `s` is a ChaCha12 generator keyed with four SplitMix64 outputs of
//! `s + k * GOLDEN_GAMMA`. Distinct counters give statistically independent
//! streams, and the derivation is documented so that reports stating
//! `(master seed, stream counter)` pin every draw.
//!
//! Stream counters are laid out as `purpose + 2 * component + direction`
//! ([`stream_tag`]), which keeps the per-component noises and the
//! forward/backward halves of a two-sided path on independent streams.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::math;

/// Weyl increment of SplitMix64.
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Purpose base for path increment streams.
pub const PURPOSE_PATH: u64 = 0;
/// Purpose base for sampling auxiliary draws (dissipativity probes, ...).
pub const PURPOSE_PROBE: u64 = 1 << 32;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream counter for component `j` of a path family, `forward = 0` /
/// `backward = 1` halves.
#[inline]
pub fn stream_tag(purpose: u64, component: usize, direction: u64) -> u64 {
    purpose
        .wrapping_add((component as u64).wrapping_mul(2))
        .wrapping_add(direction)
}

/// A deterministic substream of the master seed.
pub struct Stream {
    rng: ChaCha12Rng,
    spare_normal: Option<f64>,
}

impl Stream {
    /// Derive substream `tag` of `master`.
    pub fn derive(master: u64, tag: u64) -> Self {
        let mut state = master.wrapping_add(tag.wrapping_mul(GOLDEN_GAMMA));
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Stream {
            rng: ChaCha12Rng::from_seed(key),
            spare_normal: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform draw clamped into the open interval `(0, 1)`.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        const EPS: f64 = 1.0 / 9_007_199_254_740_992.0;
        self.uniform().max(EPS).min(1.0 - EPS)
    }

    /// Uniform draw on `[lo, hi)`.
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box-Muller; the second draw of each pair is cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        let r = math::sqrt(-2.0 * math::ln(u1));
        let theta = 2.0 * core::f64::consts::PI * u2;
        self.spare_normal = Some(r * math::sin(theta));
        r * math::cos(theta)
    }

    /// Exponential draw with unit mean.
    #[inline]
    pub fn exponential(&mut self) -> f64 {
        -math::ln(self.uniform_open())
    }

    /// Poisson count with the given mean.
    ///
    /// Knuth's product method for small means; larger means are split in two
    /// (a Poisson sum of independent halves), keeping the draw exact without
    /// `exp(-mean)` underflow.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        assert!(mean >= 0.0 && mean.is_finite());
        if mean == 0.0 {
            return 0;
        }
        if mean > 20.0 {
            let half = mean / 2.0;
            return self.poisson(half) + self.poisson(mean - half);
        }
        let limit = math::exp(-mean);
        let mut count = 0u64;
        let mut prod = self.uniform_open();
        while prod > limit {
            count += 1;
            prod *= self.uniform_open();
        }
        count
    }

    /// Symmetric alpha-stable draw (unit scale) by the Chambers-Mallows-Stuck
    /// transform.
    ///
    /// The output has characteristic function `exp(-|u|^alpha)`; at
    /// `alpha = 2` this is a Gaussian with variance 2.
    pub fn symmetric_stable(&mut self, alpha: f64) -> f64 {
        debug_assert!(alpha > 1.0 && alpha <= 2.0);
        let v = core::f64::consts::PI * (self.uniform_open() - 0.5);
        let w = self.exponential().max(f64::MIN_POSITIVE);
        let num = math::sin(alpha * v);
        let den = math::powf(math::cos(v), 1.0 / alpha);
        let tail = math::powf(
            (math::cos((1.0 - alpha) * v) / w).max(f64::MIN_POSITIVE),
            (1.0 - alpha) / alpha,
        );
        num / den * tail
    }
}
