//! Deterministic random streams.
//!
//! Every random draw in training and sampling comes from a stream addressed
//! by (seed, scope, purpose, position). Positions are step numbers, so a run
//! resumed from a checkpoint at step k draws exactly what the uninterrupted
//! run would have drawn.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tsgan_autograd::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Init = 1,
    CriticBatch = 2,
    CriticLatent = 3,
    Interpolation = 4,
    CriticNoise = 5,
    GeneratorLatent = 6,
    GeneratorNoise = 7,
    Condition = 8,
    Sample = 9,
    Classifier = 10,
}

/// Words reserved per position; far more than one step ever consumes.
const POSITION_SHIFT: u32 = 40;

pub fn stream(seed: u64, scope: u64, purpose: Purpose, position: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((scope << 8) | purpose as u64);
    rng.set_word_pos((position as u128) << POSITION_SHIFT);
    rng
}

/// `m × z_dim` standard normal draws.
pub fn sample_latent(m: usize, z_dim: usize, rng: &mut ChaCha8Rng) -> Tensor {
    assert!(m > 0 && z_dim > 0, "latent batch must be non-empty");
    let data = (0..m * z_dim).map(|_| StandardNormal.sample(rng)).collect();
    Tensor::from_vec(&[m, z_dim], data).expect("shape matches")
}
