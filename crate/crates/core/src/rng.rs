//! Portable seeded randomness.
//!
//! Every stochastic step in the crate draws from [`SeededRng`], a
//! xoshiro256++ generator whose 256-bit state is expanded from a 64-bit seed
//! with SplitMix64. Both algorithms are fully specified by their published
//! reference code, so a seed reproduces the same stream in any language.
//!
//! Derived quantities are defined bit-for-bit here rather than delegated to a
//! distribution library:
//!
//! * `uniform()` = `(next_u64() >> 11) * 2^-53`, in `[0, 1)`.
//! * `below(n)` = rejection sampling on the top bits: draw `next_u64()`,
//!   reject values `>= u64::MAX - (u64::MAX % n)`, return `v % n`.
//! * `shuffle` is Fisher-Yates from the last index down, `j = below(i + 1)`.
//! * `substream(i)` is the generator state advanced by `i + 1` applications
//!   of the xoshiro256 `jump()` polynomial (2^128 steps each). Parallel units
//!   (forest trees, CV folds) each own one substream, so the results do not
//!   depend on scheduling.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: Xoshiro256PlusPlus,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    /// Independent stream `index` derived from `seed`.
    pub fn substream(seed: u64, index: u64) -> Self {
        let mut rng = Self::new(seed);
        for _ in 0..=index {
            rng.inner.jump();
        }
        rng
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// `count` distinct indices from `0..n`, returned in ascending order.
    pub fn sample_indices(&mut self, n: usize, count: usize) -> Vec<usize> {
        let count = count.min(n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..count {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        let mut picked = pool[..count].to_vec();
        picked.sort_unstable();
        picked
    }

    /// Standard normal via Box-Muller (one draw per call, two uniforms).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = SeededRng::new(42);
        let mut b = SeededRng::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn substreams_differ() {
        let mut a = SeededRng::substream(42, 0);
        let mut b = SeededRng::substream(42, 1);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn below_stays_in_range() {
        let mut rng = SeededRng::new(7);
        for n in 1..50 {
            for _ in 0..20 {
                assert!(rng.below(n) < n);
            }
        }
    }

    #[test]
    fn sample_indices_distinct_sorted() {
        let mut rng = SeededRng::new(1);
        let s = rng.sample_indices(40, 6);
        assert_eq!(s.len(), 6);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }
}
