use tsgan_autograd::{backward, GradMap, Tensor};
use tsgan_nn::{clip_tensor, weight_clip, AdamConfig, AdamState, LayerSpec, Network};

fn scalar_net(value: f32) -> Network {
    let mut net = Network::new(&[1], vec![LayerSpec::Dense { inputs: 1, outputs: 1 }]).unwrap();
    net.set_param("0.weight", vec![value]).unwrap();
    net
}

fn weight_grad(net: &Network, g: f32) -> GradMap {
    let mut grads = GradMap::default();
    let w = net.param("0.weight").unwrap();
    grads.insert(w, Tensor::from_vec(&[1, 1], vec![g]).unwrap());
    grads
}

#[test]
fn first_step_moves_by_alpha() {
    for config in [AdamConfig::gan(), AdamConfig::classifier()] {
        for g in [1e-3f32, 0.7, -250.0] {
            let mut net = scalar_net(0.0);
            let mut adam = AdamState::new(config);
            let grads = weight_grad(&net, g);
            adam.step(&mut net, &grads).unwrap();
            let moved = net.param("0.weight").unwrap().data()[0];
            assert!((moved.abs() - config.alpha).abs() < config.alpha * 1e-4, "g={g}: moved {moved}");
            assert_eq!(moved.signum(), -g.signum());
            assert_eq!(adam.step_count(), 1);
        }
    }
}

#[test]
fn zero_and_missing_gradients_leave_parameters() {
    let mut net = scalar_net(0.25);
    let before: Vec<Vec<f32>> = net.params().iter().map(|p| p.to_vec()).collect();
    let mut adam = AdamState::new(AdamConfig::classifier());
    let grads = weight_grad(&net, 0.0);
    adam.step(&mut net, &grads).unwrap();
    adam.step(&mut net, &GradMap::default()).unwrap();
    let after: Vec<Vec<f32>> = net.params().iter().map(|p| p.to_vec()).collect();
    assert_eq!(before, after);
    assert_eq!(adam.step_count(), 2);
}

#[test]
fn five_steps_on_a_quadratic_follow_the_recursion() {
    let config = AdamConfig {
        alpha: 0.1,
        beta1: 0.9,
        beta2: 0.999,
        eps: 1e-8,
    };
    let mut net = scalar_net(0.0);
    let mut adam = AdamState::new(config);

    // Hand-unrolled reference in f64 for f(p) = (p - 3)².
    let (mut p, mut m, mut v) = (0.0f64, 0.0f64, 0.0f64);
    let (b1, b2) = (0.9f64, 0.999f64);
    for t in 1..=5 {
        let w = net.param("0.weight").unwrap().clone();
        let loss = w.offset(-3.0).square().sum();
        let grads = backward(&loss, &[&w]).unwrap();
        adam.step(&mut net, &grads).unwrap();

        let g = 2.0 * (p - 3.0);
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        let m_hat = m / (1.0 - b1.powi(t));
        let v_hat = v / (1.0 - b2.powi(t));
        p -= 0.1 * m_hat / (v_hat.sqrt() + 1e-8);

        let got = net.param("0.weight").unwrap().data()[0] as f64;
        assert!((got - p).abs() < 1e-6, "step {t}: {got} vs {p}");
    }
}

#[test]
fn updated_parameters_stay_trainable() {
    let mut net = scalar_net(1.0);
    let mut adam = AdamState::new(AdamConfig::gan());
    let grads = weight_grad(&net, 1.0);
    adam.step(&mut net, &grads).unwrap();
    let w = net.param("0.weight").unwrap();
    assert!(w.is_leaf());
    let g = backward(&w.square().sum(), &[w]).unwrap();
    assert!(g.get(w).is_some());
}

#[test]
fn gradient_shape_mismatch_is_an_error() {
    let mut net = scalar_net(1.0);
    let mut grads = GradMap::default();
    grads.insert(net.param("0.weight").unwrap(), Tensor::zeros(&[2]));
    assert!(AdamState::new(AdamConfig::gan()).step(&mut net, &grads).is_err());
}

#[test]
fn clipping_examples() {
    let t = Tensor::from_vec(&[4], vec![0.5, -0.5, 0.004, -0.01]).unwrap();
    assert_eq!(clip_tensor(&t, 0.01).data(), &[0.01, -0.01, 0.004, -0.01]);
    let zeros = Tensor::zeros(&[3]);
    assert_eq!(clip_tensor(&zeros, 0.01), zeros);

    let mut net = Network::new(&[3], vec![LayerSpec::Dense { inputs: 3, outputs: 2 }]).unwrap();
    net.set_param("0.weight", vec![0.5, -2.0, 0.003, 0.0, 0.01, -0.0099]).unwrap();
    net.set_param("0.bias", vec![3.0, -3.0]).unwrap();
    weight_clip(&mut net, 0.01);
    assert_eq!(net.param("0.weight").unwrap().data(), &[0.01, -0.01, 0.003, 0.0, 0.01, -0.0099]);
    assert_eq!(net.param("0.bias").unwrap().data(), &[0.01, -0.01]);
    assert!(net.params().iter().all(|p| p.is_leaf()));
}
