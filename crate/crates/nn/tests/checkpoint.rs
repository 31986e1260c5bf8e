use proptest::prelude::*;
use tsgan_autograd::{backward, Tensor};
use tsgan_nn::checkpoint::{self, Record};
use tsgan_nn::{AdamConfig, AdamState, LayerSpec, Mode, Network, NnError};

fn small_net() -> Network {
    Network::new(
        &[2, 8],
        vec![
            LayerSpec::conv1d_same(2, 3, 3),
            LayerSpec::BatchNorm { channels: 3 },
            LayerSpec::GlobalAvgPool,
            LayerSpec::Dense { inputs: 3, outputs: 2 },
        ],
    )
    .unwrap()
}

#[test]
fn byte_layout() {
    let mut bytes = Vec::new();
    let rec = Record {
        name: "ab".into(),
        shape: vec![2],
        data: vec![1.0, -2.0],
    };
    checkpoint::write_records(&mut bytes, &[rec]).unwrap();
    let mut expected = b"TSG1".to_vec();
    expected.extend(2u64.to_le_bytes());
    expected.extend(b"ab");
    expected.extend(1u64.to_le_bytes());
    expected.extend(2u64.to_le_bytes());
    expected.extend(1.0f32.to_le_bytes());
    expected.extend((-2.0f32).to_le_bytes());
    assert_eq!(bytes, expected);
}

#[test]
fn malformed_input_is_rejected() {
    assert!(matches!(checkpoint::read_records(&b"TSG2"[..]), Err(NnError::Format(_))));
    let mut bytes = Vec::new();
    let rec = Record {
        name: "w".into(),
        shape: vec![3],
        data: vec![1.0, 2.0, 3.0],
    };
    checkpoint::write_records(&mut bytes, &[rec]).unwrap();
    bytes.pop();
    assert!(matches!(checkpoint::read_records(&bytes[..]), Err(NnError::Format(_))));
}

#[test]
fn network_round_trip_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.tsg");
    let mut net = small_net().initialized(3);
    let x = Tensor::from_vec(&[2, 2, 8], (0..32).map(|i| (i as f32 * 0.37).sin()).collect()).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    net.forward(&x, Mode::Train(&mut rng)).unwrap();
    checkpoint::save_network(&net, &path).unwrap();

    let mut loaded = small_net();
    checkpoint::load_network(&mut loaded, &path).unwrap();
    assert_eq!(loaded.forward_eval(&x).unwrap(), net.forward_eval(&x).unwrap());
    assert_eq!(loaded.running_stats(1), net.running_stats(1));

    let mut other = Network::new(&[3], vec![LayerSpec::Dense { inputs: 3, outputs: 1 }]).unwrap();
    assert!(checkpoint::load_network(&mut other, &path).is_err());
}

#[test]
fn optimizer_round_trip_resumes_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("adam.tsg");
    let mut net = small_net().initialized(9);
    let x = Tensor::from_vec(&[2, 2, 8], (0..32).map(|i| i as f32 / 32.0).collect()).unwrap();
    let mut adam = AdamState::new(AdamConfig::classifier());
    let step = |net: &mut Network, adam: &mut AdamState| {
        let y = net.forward_eval(&x).unwrap();
        let loss = y.square().sum();
        let params = net.params();
        let grads = backward(&loss, &params).unwrap();
        adam.step(net, &grads).unwrap();
    };
    step(&mut net, &mut adam);
    step(&mut net, &mut adam);
    checkpoint::save_adam(&adam, &path).unwrap();
    let mut resumed = checkpoint::load_adam(AdamConfig::classifier(), &path).unwrap();
    assert_eq!(resumed, adam);

    let mut net2 = net.clone();
    step(&mut net, &mut adam);
    step(&mut net2, &mut resumed);
    for (a, b) in net.params().iter().zip(net2.params()) {
        assert_eq!(a.data(), b.data());
    }
}

use rand::SeedableRng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn records_round_trip(
        recs in prop::collection::vec(
            ("[a-z0-9._]{0,12}", prop::collection::vec(0usize..4, 0..4)),
            0..5,
        ),
        seed in any::<u64>(),
    ) {
        let mut state = seed;
        let records: Vec<Record> = recs
            .into_iter()
            .map(|(name, shape)| {
                let n: usize = shape.iter().product();
                let data = (0..n)
                    .map(|_| {
                        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        f32::from_bits((state >> 32) as u32)
                    })
                    .collect();
                Record { name, shape, data }
            })
            .collect();
        let mut bytes = Vec::new();
        checkpoint::write_records(&mut bytes, &records).unwrap();
        let back = checkpoint::read_records(&bytes[..]).unwrap();
        prop_assert_eq!(back.len(), records.len());
        for (a, b) in back.iter().zip(&records) {
            prop_assert_eq!(&a.name, &b.name);
            prop_assert_eq!(&a.shape, &b.shape);
            let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&a.data), bits(&b.data));
        }
    }
}
