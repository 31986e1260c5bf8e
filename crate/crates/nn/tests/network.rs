use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tsgan_autograd::{backward, finite_difference_oracle, relative_error, Tensor};
use tsgan_nn::{LayerSpec, Mode, Network, NnError};

fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0f32..1.0)).collect()).unwrap()
}

fn dot64(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(p, q)| *p as f64 * *q as f64).sum()
}

#[test]
fn dense_identity_example() {
    let mut net = Network::new(&[2], vec![LayerSpec::Dense { inputs: 2, outputs: 2 }]).unwrap();
    net.set_param("0.weight", vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    let y = net.forward_eval(&Tensor::from_vec(&[1, 2], vec![1.0, 2.0]).unwrap()).unwrap();
    assert_eq!(y.data(), &[1.0, 2.0]);
}

#[test]
fn leaky_relu_example() {
    let net = Network::new(&[2], vec![LayerSpec::LeakyRelu { slope: 0.2 }]).unwrap();
    let y = net.forward_eval(&Tensor::from_vec(&[1, 2], vec![-1.0, 2.0]).unwrap()).unwrap();
    assert!((y.data()[0] + 0.2).abs() < 1e-7);
    assert_eq!(y.data()[1], 2.0);
}

/// Straight-line 1D convolution over one sample `[c, l]`, weight `[o, c, k]`.
fn direct_conv1d(x: &[f32], c: usize, l: usize, w: &[f32], b: &[f32], o: usize, k: usize, stride: usize, pad: (usize, usize)) -> (Vec<f32>, usize) {
    let padded = l + pad.0 + pad.1;
    let out_len = (padded - k) / stride + 1;
    let mut y = vec![0.0f32; o * out_len];
    for oc in 0..o {
        for t in 0..out_len {
            let mut acc = b[oc] as f64;
            for ic in 0..c {
                for j in 0..k {
                    let pos = (t * stride + j) as isize - pad.0 as isize;
                    if pos >= 0 && (pos as usize) < l {
                        acc += x[ic * l + pos as usize] as f64 * w[(oc * c + ic) * k + j] as f64;
                    }
                }
            }
            y[oc * out_len + t] = acc as f32;
        }
    }
    (y, out_len)
}

#[test]
fn two_layer_conv_matches_direct_oracle() {
    let specs = vec![
        LayerSpec::conv1d_same(2, 3, 4),
        LayerSpec::LeakyRelu { slope: 0.2 },
        LayerSpec::Conv1d {
            in_channels: 3,
            out_channels: 2,
            kernel: 3,
            stride: 2,
            padding: (1, 1),
        },
    ];
    let net = randomized(Network::new(&[2, 9], specs).unwrap(), 11);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random(&[2, 2, 9], &mut rng);
    let y = net.forward_eval(&x).unwrap();

    let w1 = net.param("0.weight").unwrap().to_vec();
    let b1 = net.param("0.bias").unwrap().to_vec();
    let w2 = net.param("2.weight").unwrap().to_vec();
    let b2 = net.param("2.bias").unwrap().to_vec();
    let mut expected = Vec::new();
    for s in 0..2 {
        let sample = &x.data()[s * 18..(s + 1) * 18];
        let (h, l1) = direct_conv1d(sample, 2, 9, &w1, &b1, 3, 4, 1, (1, 2));
        assert_eq!(l1, 9);
        let h: Vec<f32> = h.iter().map(|&v| if v > 0.0 { v } else { 0.2 * v }).collect();
        let (out, l2) = direct_conv1d(&h, 3, 9, &w2, &b2, 2, 3, 2, (1, 1));
        assert_eq!(l2, 5);
        expected.extend(out);
    }
    assert_eq!(y.shape(), &[2, 2, 5]);
    let err = relative_error(y.data(), &expected, 1e-6);
    assert!(err < 1e-5, "relative error {err:.2e}");
}

#[test]
fn shape_errors_name_the_layer() {
    let err = Network::new(
        &[4],
        vec![
            LayerSpec::Dense { inputs: 4, outputs: 3 },
            LayerSpec::Tanh,
            LayerSpec::Dense { inputs: 5, outputs: 1 },
        ],
    )
    .unwrap_err();
    assert!(matches!(err, NnError::InvalidSpec { index: 2, kind: "dense", .. }), "{err}");

    let err = Network::new(
        &[3, 8],
        vec![LayerSpec::Conv1d {
            in_channels: 3,
            out_channels: 0,
            kernel: 3,
            stride: 1,
            padding: (0, 0),
        }],
    )
    .unwrap_err();
    assert!(matches!(err, NnError::InvalidSpec { index: 0, .. }));

    let net = Network::new(&[4], vec![LayerSpec::Dense { inputs: 4, outputs: 3 }]).unwrap();
    assert!(matches!(net.forward_eval(&Tensor::zeros(&[2, 5])), Err(NnError::InputShape { .. })));
}

#[test]
fn same_seed_gives_identical_parameters() {
    let specs = || vec![LayerSpec::Dense { inputs: 6, outputs: 5 }, LayerSpec::Dense { inputs: 5, outputs: 2 }];
    let a = Network::new(&[6], specs()).unwrap().initialized(42);
    let b = Network::new(&[6], specs()).unwrap().initialized(42);
    let c = Network::new(&[6], specs()).unwrap().initialized(43);
    for ((pa, pb), pc) in a.params().iter().zip(b.params()).zip(c.params()) {
        let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(pa), bits(pb));
        if pa.data().iter().any(|&v| v != 0.0) {
            assert_ne!(bits(pa), bits(pc));
        }
    }
}

#[test]
fn init_statistics() {
    let net = Network::new(&[100], vec![LayerSpec::Dense { inputs: 100, outputs: 100 }, LayerSpec::BatchNorm { channels: 100 }])
        .unwrap()
        .initialized(5);
    let w = net.param("0.weight").unwrap();
    assert_eq!(w.numel(), 10_000);
    let mean = w.data().iter().map(|&v| v as f64).sum::<f64>() / 1e4;
    assert!(mean.abs() < 3.0 * 0.02 / 100.0, "mean {mean}");
    let var = w.data().iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (1e4 - 1.0);
    assert!((var.sqrt() - 0.02).abs() < 0.002, "stddev {}", var.sqrt());
    assert!(net.param("0.bias").unwrap().data().iter().all(|&v| v == 0.0));
    assert!(net.param("1.gamma").unwrap().data().iter().all(|&v| v == 1.0));
    assert!(net.param("1.beta").unwrap().data().iter().all(|&v| v == 0.0));
}

#[test]
fn parameter_names_are_unique_and_stable() {
    let net = Network::new(
        &[1, 8, 8],
        vec![
            LayerSpec::Conv2d {
                in_channels: 1,
                out_channels: 2,
                kernel: [3, 3],
                stride: [2, 2],
                padding: [1, 1],
            },
            LayerSpec::BatchNorm { channels: 2 },
            LayerSpec::Reshape { shape: vec![32] },
            LayerSpec::Dense { inputs: 32, outputs: 1 },
        ],
    )
    .unwrap();
    let names: Vec<String> = net.named_params().into_iter().map(|(n, _)| n).collect();
    assert_eq!(names, ["0.weight", "0.bias", "1.gamma", "1.beta", "3.weight", "3.bias"]);
    let buffers: Vec<String> = net.named_buffers().into_iter().map(|(n, _)| n).collect();
    assert_eq!(buffers, ["1.running_mean", "1.running_var"]);
}

#[test]
fn global_avg_pool_equals_direct_mean() {
    let net = Network::new(&[3, 4, 5], vec![LayerSpec::GlobalAvgPool]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = random(&[2, 3, 4, 5], &mut rng);
    let y = net.forward_eval(&x).unwrap();
    assert_eq!(y.shape(), &[2, 3]);
    for (i, chunk) in x.data().chunks(20).enumerate() {
        let mean = chunk.iter().map(|&v| v as f64).sum::<f64>() / 20.0;
        assert!((y.data()[i] as f64 - mean).abs() < 1e-6);
    }
}

#[test]
fn noise_layer_behaviour() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = random(&[4, 6], &mut rng);
    let mut silent = Network::new(&[6], vec![LayerSpec::NoiseInject { stddev: 0.0 }]).unwrap();
    assert_eq!(silent.forward(&x, Mode::Train(&mut rng)).unwrap(), x);

    let mut noisy = Network::new(&[6], vec![LayerSpec::NoiseInject { stddev: 0.5 }]).unwrap();
    assert_eq!(noisy.forward_eval(&x).unwrap(), x);
    let y = noisy.forward(&x, Mode::Train(&mut rng)).unwrap();
    assert_ne!(y, x);
}

#[test]
fn sampling_pass_adds_noise_to_the_inference_pass() {
    let mut net = Network::new(&[2, 3], vec![LayerSpec::BatchNorm { channels: 2 }, LayerSpec::NoiseInject { stddev: 0.5 }]).unwrap();
    net.set_buffer("0.running_mean", vec![1.0, -2.0]).unwrap();
    net.set_buffer("0.running_var", vec![4.0, 0.25]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = random(&[2, 2, 3], &mut rng);

    let clean = net.forward_eval(&x).unwrap();
    let mut draws = ChaCha8Rng::seed_from_u64(9);
    let expected: Vec<f32> = clean
        .data()
        .iter()
        .map(|v| {
            let z: f32 = StandardNormal.sample(&mut draws);
            v + 0.5 * z
        })
        .collect();
    let got = net.forward_sample(&x, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    for (g, e) in got.data().iter().zip(&expected) {
        assert!((g - e).abs() < 1e-6, "{g} vs {e}");
    }
    let stats = net.running_stats(0).unwrap();
    assert_eq!((stats.mean.clone(), stats.var.clone()), (vec![1.0, -2.0], vec![4.0, 0.25]));
}

#[test]
fn inference_is_pure() {
    let net = Network::new(
        &[2, 16],
        vec![
            LayerSpec::conv1d_same(2, 4, 5),
            LayerSpec::BatchNorm { channels: 4 },
            LayerSpec::NoiseInject { stddev: 0.3 },
            LayerSpec::Relu,
            LayerSpec::GlobalAvgPool,
            LayerSpec::Dense { inputs: 4, outputs: 3 },
        ],
    )
    .unwrap()
    .initialized(2);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = random(&[3, 2, 16], &mut rng);
    let a = net.forward_eval(&x).unwrap();
    let b = net.forward_eval(&x).unwrap();
    assert_eq!(
        a.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        b.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
}

#[test]
fn batch_norm_training_and_running_statistics() {
    let mut net = Network::new(&[2, 3], vec![LayerSpec::BatchNorm { channels: 2 }]).unwrap();
    // Channel 0 holds 1..=6 across the batch, channel 1 holds constant 5.
    let x = Tensor::from_vec(&[2, 2, 3], vec![1.0, 2.0, 3.0, 5.0, 5.0, 5.0, 4.0, 5.0, 6.0, 5.0, 5.0, 5.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let y = net.forward(&x, Mode::Train(&mut rng)).unwrap();
    let var0 = 17.5 / 6.0;
    let expect0: Vec<f64> = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0].iter().map(|v| (v - 3.5) / (var0 + 1e-5f64).sqrt()).collect();
    let got0: Vec<f64> = [0, 1, 2, 6, 7, 8].iter().map(|&i| y.data()[i] as f64).collect();
    for (g, e) in got0.iter().zip(&expect0) {
        assert!((g - e).abs() < 1e-5, "{g} vs {e}");
    }
    assert!([3, 4, 5, 9, 10, 11].iter().all(|&i| y.data()[i] == 0.0));

    let stats = net.running_stats(0).unwrap();
    assert!((stats.mean[0] - 0.35).abs() < 1e-6);
    assert!((stats.mean[1] - 0.5).abs() < 1e-6);
    assert!((stats.var[0] as f64 - (0.9 + 0.1 * 3.5)).abs() < 1e-6);
    assert!((stats.var[1] - 0.9).abs() < 1e-6);
}

/// Network gradients (input and every parameter) against central differences
/// of `Σ net(x) ⊙ r`, in training mode with a replayed noise stream.
fn check_network(name: &str, net: &Network, x: &Tensor, tol: f64, zero: &[&str]) {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let r = random(net.clone().forward_eval(x).unwrap().shape(), &mut rng);
    let loss_of = |net: &Network, x: &Tensor| -> f64 {
        let mut net = net.clone();
        let mut noise = ChaCha8Rng::seed_from_u64(5);
        dot64(&net.forward(x, Mode::Train(&mut noise)).unwrap(), &r)
    };

    let leaf = x.requires_grad();
    let mut work = net.clone();
    let mut noise = ChaCha8Rng::seed_from_u64(5);
    let out = work.forward(&leaf, Mode::Train(&mut noise)).unwrap();
    let loss = out.mul(&r).unwrap().sum();
    let params = work.params();
    let mut wrt: Vec<&Tensor> = vec![&leaf];
    wrt.extend(params.iter().copied());
    let grads = backward(&loss, &wrt).unwrap();

    let gx = grads.get_or_zeros(&leaf);
    let fd = finite_difference_oracle(|v| loss_of(net, v), x, 1e-3);
    let err = relative_error(gx.data(), fd.data(), 1e-6);
    assert!(err < tol, "{name}: input gradient error {err:.2e}");

    for (pname, p) in work.named_params() {
        let g = grads.get_or_zeros(p);
        if zero.contains(&pname.as_str()) {
            let norm = g.data().iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt();
            assert!(norm < 1e-5, "{name}: {pname} should have no gradient, norm {norm:.2e}");
            continue;
        }
        let fd = finite_difference_oracle(
            |v| {
                let mut n = net.clone();
                n.set_param(&pname, v.to_vec()).unwrap();
                loss_of(&n, x)
            },
            &p.detach(),
            1e-3,
        );
        let err = relative_error(g.data(), fd.data(), 1e-6);
        assert!(err < tol, "{name}: gradient error {err:.2e} for {pname}");
    }
}

fn randomized(mut net: Network, seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shapes: Vec<(String, Vec<usize>)> = net.named_params().into_iter().map(|(n, p)| (n, p.shape().to_vec())).collect();
    for (n, s) in shapes {
        let mut v = random(&s, &mut rng).to_vec();
        if n.ends_with("gamma") {
            v.iter_mut().for_each(|g| *g += 1.5);
        }
        net.set_param(&n, v).unwrap();
    }
    net
}

#[test]
fn gradients_of_every_layer_kind() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cases: Vec<(&str, Vec<usize>, Vec<LayerSpec>)> = vec![
        ("dense", vec![5], vec![LayerSpec::Dense { inputs: 5, outputs: 3 }]),
        (
            "conv1d",
            vec![2, 9],
            vec![LayerSpec::Conv1d {
                in_channels: 2,
                out_channels: 3,
                kernel: 4,
                stride: 2,
                padding: (1, 2),
            }],
        ),
        (
            "conv2d",
            vec![2, 6, 5],
            vec![LayerSpec::Conv2d {
                in_channels: 2,
                out_channels: 3,
                kernel: [3, 2],
                stride: [2, 1],
                padding: [1, 0],
            }],
        ),
        (
            "transposed-conv1d",
            vec![3, 4],
            vec![LayerSpec::ConvTranspose1d {
                in_channels: 3,
                out_channels: 2,
                kernel: 4,
                stride: 2,
                padding: 1,
            }],
        ),
        (
            "transposed-conv2d",
            vec![2, 3, 3],
            vec![LayerSpec::ConvTranspose2d {
                in_channels: 2,
                out_channels: 2,
                kernel: [4, 4],
                stride: [2, 2],
                padding: [1, 1],
            }],
        ),
        ("leaky-relu", vec![7], vec![LayerSpec::LeakyRelu { slope: 0.2 }]),
        ("relu", vec![7], vec![LayerSpec::Relu]),
        ("tanh", vec![7], vec![LayerSpec::Tanh]),
        ("sigmoid", vec![7], vec![LayerSpec::Sigmoid]),
        ("batch-norm", vec![3, 4], vec![LayerSpec::BatchNorm { channels: 3 }]),
        ("global-avg-pool", vec![3, 2, 4], vec![LayerSpec::GlobalAvgPool]),
        ("reshape", vec![2, 6], vec![LayerSpec::Reshape { shape: vec![3, 4] }]),
        ("noise-inject", vec![6], vec![LayerSpec::NoiseInject { stddev: 0.3 }]),
        ("resize2d", vec![2, 3, 4], vec![LayerSpec::Resize2d { height: 5, width: 7 }]),
    ];
    for (i, (name, shape, specs)) in cases.into_iter().enumerate() {
        let net = randomized(Network::new(&shape, specs).unwrap(), i as u64);
        let mut batch = vec![3];
        batch.extend(&shape);
        let x = random(&batch, &mut rng);
        check_network(name, &net, &x, 1e-3, &[]);
    }
}

#[test]
fn gradients_through_a_mixed_stack() {
    let net = Network::new(
        &[2, 16],
        vec![
            LayerSpec::conv1d_same(2, 4, 8),
            LayerSpec::BatchNorm { channels: 4 },
            LayerSpec::LeakyRelu { slope: 0.2 },
            LayerSpec::Conv1d {
                in_channels: 4,
                out_channels: 3,
                kernel: 4,
                stride: 2,
                padding: (1, 1),
            },
            LayerSpec::Tanh,
            LayerSpec::GlobalAvgPool,
            LayerSpec::Dense { inputs: 3, outputs: 2 },
        ],
    )
    .unwrap();
    let net = randomized(net, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = random(&[4, 2, 16], &mut rng);
    // The first bias feeds batch norm, which cancels it exactly.
    check_network("stack", &net, &x, 1e-2, &["0.bias"]);
}
