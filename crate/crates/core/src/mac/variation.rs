// SPDX-License-Identifier: Apache-2.0
//! Deterministic process-variation draws.
//!
//! Draw `i` of a window is the `i`-th standard normal from a ChaCha stream
//! keyed by `(seed, kernel id)`, so results never depend on which thread
//! evaluates which unit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::Scalar;

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn mix(parts: &[u64]) -> u64 {
    parts.iter().fold(0x2545_f491_4f6c_dd1d, |h, &p| splitmix(h ^ splitmix(p)))
}

/// Seed of the MAC unit at output pixel `(oy, ox)` during window `window`.
pub fn unit_seed(seed: u64, window: u64, oy: usize, ox: usize) -> u64 {
    mix(&[seed, window, oy as u64, ox as u64])
}

/// Standard-normal draws indexed by event order within one window.
pub struct VariationDraws {
    rng: Option<ChaCha8Rng>,
}

impl VariationDraws {
    pub fn new(seed: u64, kernel_id: u32, enabled: bool) -> Self {
        VariationDraws {
            rng: enabled.then(|| ChaCha8Rng::seed_from_u64(mix(&[seed, kernel_id.into()]))),
        }
    }

    /// Next draw, or zero when variation is disabled.
    pub fn next_draw<T: Scalar>(&mut self) -> T {
        match &mut self.rng {
            Some(rng) => T::of(StandardNormal.sample(rng)),
            None => T::zero(),
        }
    }
}
