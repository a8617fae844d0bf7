//! Seeded PRNG used for every random choice in the pipeline.
//!
//! The generator is xoshiro256++ seeded through SplitMix64 (the reference
//! seeding procedure). Derived draws are defined here so the sequence is
//! reproducible from the seed alone:
//!
//! * `below(n)`: `(next_u64() as u128 * n as u128) >> 64`
//! * `unit_f64()`: `(next_u64() >> 11) * 2^-53`
//! * `shuffle`: Fisher–Yates, `i` from `len - 1` down to `1`, swap `i` with `below(i + 1)`

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

#[derive(Debug, Clone)]
pub struct SplitRng(Xoshiro256PlusPlus);

impl SplitRng {
    pub fn new(seed: u64) -> Self {
        SplitRng(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform integer in `[0, n)`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn range_inclusive(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below(hi - lo + 1)
    }

    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit_f64() < p
    }

    pub fn choose<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len())]
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
