//! Seedable random-number streams with stable sub-stream derivation.
//!
//! Every sampler in this crate draws from an [`RngStream`], a counter-based
//! generator (ChaCha8) wrapped with the three primitives the algorithms
//! need: standard-normal vectors, uniforms on `[0, 1)`, and fair draws from
//! `{-1, +1}`. Identical seeds give identical draw sequences, and per-chain
//! sub-streams are derived with a stable 64-bit mix so that parallel chains
//! are reproducible from a single root seed.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// splitmix64 finalizer; a fixed, well-mixed 64-bit permutation.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a chain seed from a root seed and one stream index.
///
/// `derive_seed(root, i)` and `derive_seed(root, j)` give independent
/// streams for `i != j`; the mapping is fixed forever so artifacts are
/// reproducible across runs and machines.
pub fn derive_seed(root: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(root) ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Derives a chain seed from a root seed, a grid index, and a replication
/// index (the harness layout).
pub fn derive_chain_seed(root: u64, grid_index: u64, replication: u64) -> u64 {
    derive_seed(derive_seed(root, grid_index), replication)
}

/// A single-owner random stream. Not shared between chains.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn seed_from(seed: u64) -> Self {
        RngStream {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Sub-stream for chain `index` under this root seed.
    pub fn substream(root: u64, index: u64) -> Self {
        Self::seed_from(derive_seed(root, index))
    }

    /// One standard-normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Fills `out` with independent standard-normal draws.
    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.standard_normal();
        }
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform on `(0, 1]`, safe to pass through `ln`.
    pub fn uniform_open(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// Fair draw from `{-1, +1}`.
    pub fn direction(&mut self) -> i8 {
        if self.uniform() < 0.5 {
            -1
        } else {
            1
        }
    }

    /// Uniform integer in `[0, n)`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }
}

// Pass-through so `rand_distr` distributions can sample from a stream.
impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seeds_give_identical_sequences() {
        let mut a = RngStream::seed_from(42);
        let mut b = RngStream::seed_from(42);
        for _ in 0..100 {
            assert_eq!(a.standard_normal(), b.standard_normal());
            assert_eq!(a.uniform(), b.uniform());
            assert_eq!(a.direction(), b.direction());
        }
    }

    #[test]
    fn substreams_differ() {
        let mut a = RngStream::substream(7, 0);
        let mut b = RngStream::substream(7, 1);
        let xa: Vec<f64> = (0..8).map(|_| a.uniform()).collect();
        let xb: Vec<f64> = (0..8).map(|_| b.uniform()).collect();
        assert_ne!(xa, xb);
    }

    #[test]
    fn derive_seed_is_stable() {
        // Frozen values: the derivation must never change or persisted
        // artifacts stop being reproducible.
        assert_eq!(derive_seed(0, 0), splitmix64(splitmix64(0)));
        assert_eq!(derive_seed(1, 2), derive_seed(1, 2));
        assert_ne!(derive_seed(1, 2), derive_seed(2, 1));
    }

    #[test]
    fn normal_draws_have_unit_moments() {
        let mut rng = RngStream::seed_from(123);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let x = rng.standard_normal();
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        // Monte Carlo bound ~ 4 / sqrt(n).
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn uniform_open_never_zero() {
        let mut rng = RngStream::seed_from(9);
        for _ in 0..10_000 {
            let u = rng.uniform_open();
            assert!(u > 0.0 && u <= 1.0);
        }
    }
}
