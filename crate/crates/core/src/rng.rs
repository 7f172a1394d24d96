//! Deterministic random sources.
//!
//! Every random draw in a session comes from a [`Substream`] keyed by
//! `(seed, iteration, fish id, tag)`. Two behaviors evaluated for the same
//! fish therefore never perturb each other's draws, and any iteration can be
//! replayed from the session seed alone.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Source of uniform draws used by the swarm behaviors.
pub trait RandomSource {
    /// Uniform draw in `[0, 1)`.
    fn unit(&mut self) -> f64;
    /// Uniform draw in `[-1, 1]`.
    fn signed(&mut self) -> f64;
}

/// Purpose of a substream. Part of the derivation key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    Spawn = 1,
    Swarm = 2,
    Follow = 3,
    Jobs = 4,
}

/// Seeded ChaCha8 stream.
#[derive(Debug, Clone)]
pub struct Substream(ChaCha8Rng);

impl Substream {
    pub fn from_seed(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn derive(seed: u64, iteration: u64, fish: u64, tag: StreamTag) -> Self {
        let mut key = splitmix(seed ^ 0x5bd1_e995_9e37_79b9);
        key = splitmix(key ^ iteration);
        key = splitmix(key ^ fish);
        key = splitmix(key ^ tag as u64);
        Self::from_seed(key)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }
}

impl RandomSource for Substream {
    fn unit(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    fn signed(&mut self) -> f64 {
        self.0.random_range(-1.0..=1.0)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Replays a fixed list of draws, in order, regardless of which method asks.
///
/// Meant for pinning behavior outcomes in tests. Panics once exhausted.
#[derive(Debug, Clone, Default)]
pub struct ScriptedSource {
    draws: VecDeque<f64>,
    consumed: usize,
}

impl ScriptedSource {
    pub fn new(draws: impl IntoIterator<Item = f64>) -> Self {
        Self {
            draws: draws.into_iter().collect(),
            consumed: 0,
        }
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }

    pub fn remaining(&self) -> usize {
        self.draws.len()
    }

    fn next(&mut self) -> f64 {
        self.consumed += 1;
        self.draws
            .pop_front()
            .unwrap_or_else(|| panic!("scripted source exhausted after {} draws", self.consumed - 1))
    }
}

impl RandomSource for ScriptedSource {
    fn unit(&mut self) -> f64 {
        self.next()
    }

    fn signed(&mut self) -> f64 {
        self.next()
    }
}
