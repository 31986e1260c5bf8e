//! The three accuracy protocols on the toy set. Synthetic data here is the
//! real training split with added jitter, so TSTR and TRTS should stay
//! close to TRTR; label-swapped copies show what a failed generator does.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tsgan::eval::{trtr, trts, tstr, FcnConfig};
use tsgan::signal::toy_sine_square;

fn main() {
    let ds = toy_sine_square(40, 64, 3);
    let cfg = FcnConfig { epochs: 50, ..FcnConfig::default() };
    let jitter = Normal::new(0.0f32, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let mut jittered = vec![Vec::new(); ds.class_count];
    for row in ds.train_split() {
        jittered[row.label].push(row.values.iter().map(|v| v + jitter.sample(&mut rng)).collect::<Vec<f32>>());
    }
    let swapped: Vec<Vec<Vec<f32>>> = jittered.iter().rev().cloned().collect();

    println!("TRTR                 {:>6.1}%", trtr(&ds, &cfg).unwrap().accuracy);
    for (name, pool) in [("jittered copies", &jittered), ("label-swapped", &swapped)] {
        let s = tstr(&ds, pool, &cfg).unwrap();
        let t = trts(&ds, pool, &cfg).unwrap();
        println!("{name:<16} TSTR {:>6.1}%  TRTS {:>6.1}%  confusion {:?}", s.accuracy, t.accuracy, s.confusion);
    }
}
