//! Deterministic random streams.
//!
//! Every stream is a ChaCha8 generator seeded through `seed_from_u64` from a
//! configuration seed plus a fixed per-purpose offset, so scene generation,
//! weight initialization and shuffling never share state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::lie::{quat_normalize, RotationMatrix};

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Scene,
    Init,
    Shuffle,
    Check,
}

impl Stream {
    fn offset(self) -> u64 {
        match self {
            Stream::Scene => 0,
            Stream::Init => 1,
            Stream::Shuffle => 2,
            Stream::Check => 3,
        }
    }
}

pub fn stream(seed: u64, purpose: Stream) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(purpose.offset()))
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform rotation from a normalized 4-D Gaussian.
pub fn uniform_rotation<R: Rng + ?Sized>(rng: &mut R) -> RotationMatrix {
    loop {
        let raw = [
            standard_normal(rng),
            standard_normal(rng),
            standard_normal(rng),
            standard_normal(rng),
        ];
        if let Ok(q) = quat_normalize(raw) {
            return q.to_rotation();
        }
    }
}
