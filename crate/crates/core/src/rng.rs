//! Address-based random streams.
//!
//! A stream is named by a seed and a path of integers (for example
//! `[sample-size index, replicate, estimator]`). The path is hashed into a
//! ChaCha8 key, so any stream can be rebuilt in isolation and no state is
//! ever handed from one stream to another.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn derive_key(seed: u64, path: &[u64]) -> [u8; 32] {
    let mut h = mix64(seed.wrapping_add(GOLDEN));
    h = mix64(h ^ (path.len() as u64).wrapping_mul(GOLDEN));
    for &p in path {
        h = mix64(h.wrapping_add(GOLDEN) ^ mix64(p.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        let word = mix64(h.wrapping_add((i as u64 + 1).wrapping_mul(GOLDEN)));
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    key
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    path: Vec<u64>,
    core: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, path: &[u64]) -> Self {
        RngStream {
            seed,
            path: path.to_vec(),
            core: ChaCha8Rng::from_seed(derive_key(seed, path)),
            spare_normal: None,
        }
    }

    /// A fresh stream addressed by this stream's path extended with `extra`.
    /// Draws already taken from `self` do not affect the result.
    pub fn substream(&self, extra: &[u64]) -> Self {
        let mut path = self.path.clone();
        path.extend_from_slice(extra);
        RngStream::new(self.seed, &path)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    pub fn next_u64(&mut self) -> u64 {
        self.core.next_u64()
    }

    /// Canonical uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal by the Box–Muller transform; the second variate of
    /// each pair is cached.
    pub fn next_standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let r = (-2.0 * self.next_open01().ln()).sqrt();
        let theta = std::f64::consts::TAU * self.next_f64();
        let (s, c) = theta.sin_cos();
        self.spare_normal = Some(r * s);
        r * c
    }
}
