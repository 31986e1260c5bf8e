//! Fits a small network to XOR with Adam, then round-trips it through a
//! checkpoint file.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tsgan_autograd::{backward, Tensor};
use tsgan_nn::checkpoint::{load_network, save_network};
use tsgan_nn::{AdamConfig, AdamState, LayerSpec, Mode, Network};

fn main() {
    let x = Tensor::from_vec(&[4, 2], vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
    let labels = [0, 1, 1, 0];

    let mut net = Network::new(
        &[2],
        vec![
            LayerSpec::Dense { inputs: 2, outputs: 16 },
            LayerSpec::Tanh,
            LayerSpec::Dense { inputs: 16, outputs: 2 },
        ],
    )
    .unwrap()
    .initialized(3);
    let mut adam = AdamState::new(AdamConfig::classifier());
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    for step in 0..=600 {
        let loss = net.forward(&x, Mode::Train(&mut rng)).unwrap().softmax_cross_entropy(&labels).unwrap();
        if step % 100 == 0 {
            println!("step {step:>3}  loss {:.4}", loss.item().unwrap());
        }
        let grads = backward(&loss, &net.params()).unwrap();
        adam.step(&mut net, &grads).unwrap();
    }

    let path = std::env::temp_dir().join("xor.tsg");
    save_network(&net, &path).unwrap();
    let mut restored = net.clone().initialized(99);
    load_network(&mut restored, &path).unwrap();
    let predicted = restored.forward_eval(&x).unwrap().argmax_rows().unwrap();
    println!("predictions after reload {predicted:?} (expected {labels:?})");
}
