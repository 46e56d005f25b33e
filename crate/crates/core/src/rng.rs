//! Seeded, splittable uniform streams.
//!
//! Every stochastic routine in the crate reads its randomness through the
//! [`UniformSource`] trait. Production code uses [`UniformStream`], a ChaCha8
//! keystream selected by `(root_seed, index)`; tests substitute scripted
//! sources to force particular trajectories.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INV_2_53: f64 = 1.0 / (1u64 << 53) as f64;

/// A source of uniform variates on `[0, 1)`.
pub trait UniformSource {
    fn next_uniform(&mut self) -> f64;

    /// Next uniform conditioned to be strictly positive. Zeros are redrawn,
    /// not clamped.
    fn next_positive_uniform(&mut self) -> f64 {
        loop {
            let u = self.next_uniform();
            if u > 0.0 {
                return u;
            }
        }
    }
}

impl<S: UniformSource + ?Sized> UniformSource for &mut S {
    fn next_uniform(&mut self) -> f64 {
        (**self).next_uniform()
    }
}

/// Deterministic uniform stream with 53-bit resolution.
#[derive(Debug, Clone)]
pub struct UniformStream {
    rng: ChaCha8Rng,
    seed: u64,
    position: u64,
}

impl UniformStream {
    pub fn new(seed: u64) -> Self {
        Self::with_index(seed, 0)
    }

    fn with_index(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self {
            rng,
            seed,
            position: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of uniforms consumed so far.
    pub fn position(&self) -> u64 {
        self.position
    }
}

impl UniformSource for UniformStream {
    fn next_uniform(&mut self) -> f64 {
        self.position += 1;
        (self.rng.next_u64() >> 11) as f64 * INV_2_53
    }
}

/// Spawns independent substreams from a single root seed.
///
/// Substream `i` is the ChaCha8 stream number `i` under the key derived from
/// the root seed, so spawning is O(1) and independent of how many other
/// substreams exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFactory {
    root_seed: u64,
}

impl StreamFactory {
    pub fn new(root_seed: u64) -> Self {
        Self { root_seed }
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn substream(&self, index: u64) -> UniformStream {
        UniformStream::with_index(self.root_seed, index)
    }
}

/// Geometric variate with success probability 1/2, supported on `{1, 2, ...}`.
///
/// Uses `G = ceil(-ln U / ln 2)`; a uniform equal to zero is rejected and
/// redrawn.
pub fn geometric_half<S: UniformSource + ?Sized>(src: &mut S) -> u64 {
    let u = src.next_positive_uniform();
    geometric_half_from(u)
}

pub(crate) fn geometric_half_from(u: f64) -> u64 {
    debug_assert!(u > 0.0 && u < 1.0 + f64::EPSILON);
    // -log2(u) is exact for powers of two, so U = 1/2 maps to 1 exactly.
    let g = (-u.log2()).ceil();
    g.max(1.0) as u64
}

/// Replays a fixed list of uniforms. Panics when exhausted.
#[derive(Debug, Clone)]
pub struct ScriptedSource {
    values: Vec<f64>,
    next: usize,
}

impl ScriptedSource {
    pub fn new(values: impl Into<Vec<f64>>) -> Self {
        Self {
            values: values.into(),
            next: 0,
        }
    }

    pub fn consumed(&self) -> usize {
        self.next
    }

    pub fn remaining(&self) -> usize {
        self.values.len() - self.next
    }
}

impl UniformSource for ScriptedSource {
    fn next_uniform(&mut self) -> f64 {
        let v = *self
            .values
            .get(self.next)
            .expect("scripted source exhausted");
        self.next += 1;
        v
    }
}
