//! Seeded random source and the few distributions the simulator needs.
//!
//! The generator is ChaCha8 (`rand_chacha`), whose output stream is fully
//! specified by its 256-bit key. The key is the little-endian concatenation of
//! four 64-bit words; a plain seed `s` uses `[s, 0, 0, 0]`, and derived streams
//! put their coordinates in the remaining words (see [`Rng::from_words`]).
//! Uniform reals take the top 53 bits of a `u64`; bounded integers use
//! rejection sampling. None of this depends on platform or `rand` version.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
    seed: [u64; 4],
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::from_words([seed, 0, 0, 0])
    }

    /// Keys the generator directly with four words. Distinct word tuples give
    /// distinct keys, so streams derived this way never collide.
    pub fn from_words(words: [u64; 4]) -> Self {
        let mut key = [0u8; 32];
        for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        Self {
            inner: ChaCha8Rng::from_seed(key),
            seed: words,
        }
    }

    pub fn seed_words(&self) -> [u64; 4] {
        self.seed
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform real in `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_NEG_53
    }

    /// Uniform integer in `0..n`.
    ///
    /// # Panics
    /// If `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "Rng::below(0)");
        let n = n as u64;
        // Largest multiple of n that fits; values at or above it are rejected.
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// Standard normal via Box–Muller (one of the pair is discarded).
    pub fn normal(&mut self) -> f64 {
        // 1 - U lies in (0, 1], keeping ln finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

pub fn uniform(rng: &mut Rng) -> f64 {
    rng.uniform()
}

/// Draws from Beta(`alpha`, `beta`).
///
/// `beta == 1` uses the exact inverse CDF `U^(1/alpha)`. Other shapes take the
/// ratio of two Gamma draws, evaluated in log space so that tiny shapes (where
/// both Gamma variates underflow) still give a value in `[0, 1]`.
pub fn beta_sample(rng: &mut Rng, alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Config(format!(
            "Beta shape parameters must be positive and finite, got ({alpha}, {beta})"
        )));
    }
    if beta == 1.0 {
        return Ok(rng.uniform().powf(1.0 / alpha));
    }
    if alpha == 1.0 {
        // Mirror image of the case above: 1 - U^(1/beta).
        return Ok(1.0 - rng.uniform().powf(1.0 / beta));
    }
    let log_x = log_gamma_sample(rng, alpha);
    let log_y = log_gamma_sample(rng, beta);
    // x / (x + y) = 1 / (1 + exp(log_y - log_x))
    let d = log_y - log_x;
    let v = if d > 0.0 {
        let e = (-d).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + d.exp())
    };
    Ok(v.clamp(0.0, 1.0))
}

/// Logarithm of a Gamma(`shape`, 1) draw.
///
/// Marsaglia–Tsang squeeze for `shape >= 1`; for `shape < 1` the boost
/// `Gamma(a) = Gamma(a + 1) · U^(1/a)`.
fn log_gamma_sample(rng: &mut Rng, shape: f64) -> f64 {
    if shape < 1.0 {
        let u = 1.0 - rng.uniform();
        return log_gamma_sample(rng, shape + 1.0) + u.ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = rng.normal();
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.uniform();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return (d * v).ln();
        }
        if u > 0.0 && u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return (d * v).ln();
        }
    }
}
