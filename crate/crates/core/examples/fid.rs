//! 1D Fréchet distance over FCN features: a trained classifier embeds each
//! series, and two sets are compared through the Gaussians fitted to their
//! embeddings. Closer sets score lower.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tsgan::eval::{fid_1d, train_real_classifier, FcnConfig};
use tsgan::signal::toy_sine_square;

fn main() {
    let ds = toy_sine_square(60, 64, 2);
    let cfg = FcnConfig { epochs: 50, ..FcnConfig::default() };
    let clf = train_real_classifier(&ds, &cfg).unwrap();

    let train: Vec<&[f32]> = ds.train_split().iter().map(|s| s.values.as_slice()).collect();
    let test: Vec<&[f32]> = ds.test_split().iter().map(|s| s.values.as_slice()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let noise: Vec<Vec<f32>> = (0..test.len())
        .map(|_| (0..ds.signal_length).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let noise: Vec<&[f32]> = noise.iter().map(Vec::as_slice).collect();

    for (name, other) in [("identical copy", &train), ("held-out split", &test), ("gaussian noise", &noise)] {
        let report = fid_1d(&clf, &ds.name, name, &train, other).unwrap();
        println!("FID(train, {name:<14}) = {:>10.4}", report.fid);
    }
}
