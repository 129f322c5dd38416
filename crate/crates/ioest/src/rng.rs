//! Deterministic random streams.
//!
//! All randomness in the crate flows through [`StreamRng`], a ChaCha8 counter
//! generator (64-bit seed, platform-independent output). Replication streams
//! are derived with [`stream_seed`], a SHA-256 based mix of the master seed,
//! a label and a replication index, so any parallel schedule sees identical
//! data. Normal variates use the inverse CDF applied to a uniform draw on
//! the open unit interval, which keeps datasets bit-identical across
//! platforms that share the floating-point environment.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, Normal};

/// Derive an independent stream seed from a master seed, a label and a
/// replication index.
pub fn stream_seed(master_seed: u64, label: &str, rep: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(rep.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// A seeded random stream with the draw primitives used by data generation.
pub struct StreamRng {
    rng: ChaCha8Rng,
    normal: Normal,
}

impl StreamRng {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            normal: Normal::new(0.0, 1.0).expect("standard normal"),
        }
    }

    /// Uniform draw on the open interval (0, 1): `(k + 0.5) * 2^-53` for a
    /// 53-bit integer `k`, so the endpoints are never hit.
    pub fn unit(&mut self) -> f64 {
        let k = self.rng.next_u64() >> 11;
        (k as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }

    /// Uniform draw on `[lo, hi]`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Standard normal draw via the inverse CDF.
    pub fn standard_normal(&mut self) -> f64 {
        let p = self.unit();
        self.normal.inverse_cdf(p)
    }

    /// Fair coin from one stream bit.
    pub fn coin(&mut self) -> bool {
        self.rng.next_u64() & 1 == 1
    }

    /// Uniform index in `0..n` (rejection sampled, unbiased).
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let n = n as u64;
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.rng.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }
}
