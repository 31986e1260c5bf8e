use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::dataset::{LabeledSeries, SignalDataset};

/// Cycles per series for both toy classes.
const TOY_CYCLES: f64 = 3.0;
const TOY_NOISE: f32 = 0.1;

/// Two classes of `length`-sample series: `sine` (random phase) and
/// `square` (random phase), each with light Gaussian noise. Half of each
/// class forms the train split.
pub fn toy_sine_square(per_class: usize, length: usize, seed: u64) -> SignalDataset {
    assert!(per_class >= 2 && length >= 2, "toy dataset needs at least 2 series of 2 samples");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0f32, TOY_NOISE).expect("valid stddev");
    let make = |label: usize, rng: &mut ChaCha8Rng| {
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let values = (0..length)
            .map(|t| {
                let s = (TOY_CYCLES * std::f64::consts::TAU * t as f64 / length as f64 + phase).sin();
                let clean = if label == 0 { s } else if s >= 0.0 { 1.0 } else { -1.0 };
                clean as f32 + noise.sample(rng)
            })
            .collect();
        LabeledSeries { label, values }
    };
    let train_per_class = per_class / 2;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for i in 0..per_class {
        for label in 0..2 {
            let s = make(label, &mut rng);
            if i < train_per_class {
                train.push(s);
            } else {
                test.push(s);
            }
        }
    }
    let train_count = train.len();
    train.extend(test);
    SignalDataset::new("toy-sine-square", train, train_count, vec!["sine".into(), "square".into()]).expect("toy dataset is well formed")
}
