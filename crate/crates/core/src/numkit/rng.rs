use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::Tensor;

/// Deterministic random stream identified by a master seed and a label.
///
/// The ChaCha key is the SHA-256 digest of `"{seed}/{label}"`, so a
/// `(seed, label)` pair produces the same sequence on every platform.
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    label: String,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, label: impl Into<String>) -> Self {
        let label = label.into();
        let digest = Sha256::digest(format!("{seed}/{label}").as_bytes());
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        SeededRng {
            seed,
            label,
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    /// Independent child stream `"{label}/{sub}"` under the same master seed.
    pub fn derive(&self, sub: impl AsRef<str>) -> SeededRng {
        SeededRng::new(self.seed, format!("{}/{}", self.label, sub.as_ref()))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Uniform draw on `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform index in `0..n` (`n > 0`).
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Rejection sampling keeps the draw unbiased.
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.inner.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform().max(f64::MIN_POSITIVE);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

pub const GUMBEL_CLAMP: f64 = 1e-12;

/// `-ln(-ln u)` for a uniform `u` clamped to `[1e-12, 1 - 1e-12]`.
pub fn gumbel_transform(u: f64) -> f64 {
    let u = u.clamp(GUMBEL_CLAMP, 1.0 - GUMBEL_CLAMP);
    -(-u.ln()).ln()
}

/// Tensor of independent standard Gumbel draws.
pub fn gumbel_sample(rng: &mut SeededRng, rows: usize, cols: usize) -> Tensor {
    let data = (0..rows * cols)
        .map(|_| gumbel_transform(rng.uniform()))
        .collect();
    Tensor::from_vec(rows, cols, data).expect("shape matches by construction")
}
