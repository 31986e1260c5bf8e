//! The gradient penalty `λ·mean((‖∇D(x̂)‖ − 1)²)` on two critics: a linear
//! one with a known answer, and the spectrogram critic at its initial
//! weights, whose penalty is then differentiated with respect to its
//! parameters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tsgan::gan::arch::spectrogram_critic;
use tsgan::gan::{gradient_penalty, interpolate, TsganConfig};
use tsgan::signal::{spectrogram_batch, toy_sine_square};
use tsgan_autograd::{backward, Tensor};
use tsgan_nn::{LayerSpec, Network};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    // D(x) = <w, x> with |w| = 3: every input gradient has norm 3.
    let mut linear = Network::new(&[2], vec![LayerSpec::Dense { inputs: 2, outputs: 1 }]).unwrap();
    linear.set_param("0.weight", vec![3.0, 0.0]).unwrap();
    let x = Tensor::from_vec(&[4, 2], vec![0.1, 2.0, -1.0, 0.5, 3.0, 3.0, 0.0, -7.0]).unwrap();
    let p = gradient_penalty(&mut linear, &x, 10.0, &mut rng).unwrap();
    println!("linear critic, |w| = 3, lambda = 10: penalty {} (expected 40)", p.value.item().unwrap());

    // Interpolates between real spectrograms and uniform noise images.
    let cfg = TsganConfig::default();
    let ds = toy_sine_square(4, 64, 1);
    let series: Vec<&[f32]> = ds.signals.iter().map(|s| s.values.as_slice()).collect();
    let real = spectrogram_batch(&series, &cfg.stft).unwrap();
    let fake = Tensor::from_vec(real.shape(), (0..real.numel()).map(|i| (i % 7) as f32 / 7.0).collect()).unwrap();
    let u: Vec<f32> = (0..series.len()).map(|i| (i as f32 + 0.5) / series.len() as f32).collect();
    let x_hat = interpolate(&real, &fake, &u).unwrap();

    let shape = [real.shape()[1], real.shape()[2], real.shape()[3]];
    let mut critic = spectrogram_critic(&cfg, shape).unwrap().initialized(1);
    let p = gradient_penalty(&mut critic, &x_hat, cfg.lambda, &mut rng).unwrap();
    let grads = backward(&p.value, &critic.params()).unwrap();
    println!(
        "spectrogram critic on {shape:?} images: penalty {:.4}, mean input-gradient norm {:.4}",
        p.value.item().unwrap(),
        p.mean_grad_norm
    );
    for (name, param) in critic.named_params().into_iter().take(4) {
        let g = grads.get_or_zeros(param);
        let norm = g.data().iter().map(|v| v * v).sum::<f32>().sqrt();
        println!("  d penalty / d {name:<10} norm {norm:.4e}");
    }
}
