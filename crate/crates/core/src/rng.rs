//! Seed derivation and fast lattice step sampling.
//!
//! Every trial draws from its own generator seeded with
//! `derive_seed(master, trial_index)`, so results never depend on how trials
//! are scheduled across workers.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type TrialRng = Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(1).wrapping_mul(GOLDEN)))
}

pub fn seeded(seed: u64) -> TrialRng {
    TrialRng::seed_from_u64(seed)
}

/// Generator for trial `index` of a run with the given master seed.
pub fn trial_rng(master: u64, index: u64) -> TrialRng {
    seeded(derive_seed(master, index))
}

/// Uniform nearest-neighbour directions drawn a few bits at a time.
///
/// In two dimensions a direction costs two bits; in three dimensions three
/// bits with the values 6 and 7 rejected, so both are exactly uniform.
#[derive(Debug, Default, Clone)]
pub struct StepSampler {
    bits: u64,
    left: u32,
}

impl StepSampler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns a direction in `0..2 * dim`: axis `dir >> 1`, sign from `dir & 1`.
    #[inline]
    pub fn direction<R: Rng + ?Sized>(&mut self, rng: &mut R, dim: usize) -> usize {
        let width = if dim == 2 { 2 } else { 3 };
        let mask = (1u64 << width) - 1;
        loop {
            if self.left < width {
                self.bits = rng.next_u64();
                self.left = 64;
            }
            let v = (self.bits & mask) as usize;
            self.bits >>= width;
            self.left -= width;
            if v < 2 * dim {
                return v;
            }
        }
    }
}
