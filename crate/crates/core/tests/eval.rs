use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsgan::eval::*;
use tsgan::signal::{LabeledSeries, SignalDataset};

/// Two classes separated by a constant offset, with noise. The first half
/// of each class goes to the train split.
fn offset_dataset(per_class: usize, length: usize, seed: u64) -> SignalDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut make = |label: usize| LabeledSeries {
        label,
        values: (0..length).map(|_| if label == 0 { -1.0 } else { 1.0 } + rng.random_range(-0.3f32..0.3)).collect(),
    };
    let half = per_class / 2;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for label in 0..2 {
        for i in 0..per_class {
            let row = make(label);
            if i < half {
                train.push(row);
            } else {
                test.push(row);
            }
        }
    }
    let train_count = train.len();
    train.extend(test);
    SignalDataset::new("offset", train, train_count, vec!["a".into(), "b".into()]).unwrap()
}

fn quick(epochs: usize) -> FcnConfig {
    FcnConfig {
        epochs,
        batch_size: 4,
        ..FcnConfig::default()
    }
}

fn refs(rows: &[LabeledSeries]) -> Vec<&[f32]> {
    rows.iter().map(|r| r.values.as_slice()).collect()
}

fn pool_from(rows: &[LabeledSeries], classes: usize) -> Vec<Vec<Vec<f32>>> {
    let mut pool = vec![Vec::new(); classes];
    for r in rows {
        pool[r.label].push(r.values.clone());
    }
    pool
}

#[test]
fn fcn_learns_a_separable_set() {
    let ds = offset_dataset(12, 16, 1);
    let clf = train_real_classifier(&ds, &quick(50)).unwrap();
    let train = refs(ds.train_split());
    let predicted = clf.predict(&train).unwrap();
    let correct = predicted.iter().zip(ds.train_split()).filter(|(p, r)| **p == r.label).count();
    assert!(correct as f64 / train.len() as f64 >= 0.99, "{correct}/{}", train.len());
    assert_eq!(trtr_with(&clf, &ds).unwrap().accuracy, 100.0);
}

#[test]
fn fcn_training_is_seeded() {
    let ds = offset_dataset(6, 12, 2);
    let a = train_real_classifier(&ds, &quick(3)).unwrap();
    let b = train_real_classifier(&ds, &quick(3)).unwrap();
    let all = refs(&ds.signals);
    assert_eq!(a.logits(&all).unwrap(), b.logits(&all).unwrap());
    let c = train_real_classifier(&ds, &FcnConfig { seed: 5, ..quick(3) }).unwrap();
    assert_ne!(a.logits(&all).unwrap(), c.logits(&all).unwrap());
}

#[test]
fn features_are_pooled_and_per_row() {
    let ds = offset_dataset(6, 12, 3);
    let clf = train_real_classifier(&ds, &quick(2)).unwrap();
    let s = &ds.signals[0].values;
    let t = &ds.signals[7].values;
    let f = clf.extract_features(&[s, t, s]).unwrap();
    assert_eq!(f.len(), 3);
    assert!(f.iter().all(|r| r.len() == FCN_FEATURES));
    assert_eq!(f[0], f[2]);
    assert!(f.iter().flatten().all(|&v| v >= 0.0), "pooled ReLU outputs");
    let alone = clf.extract_features(&[s.as_slice()]).unwrap();
    assert_eq!(alone[0], f[0]);

    let probs = clf.probabilities(&[s, t]).unwrap();
    for p in probs {
        assert!((p.iter().map(|&v| v as f64).sum::<f64>() - 1.0).abs() < 1e-6);
    }
    assert!(clf.predict(&[&s[..5]]).is_err(), "length mismatch");
}

#[test]
fn untrained_classifiers_are_rejected_for_features() {
    let clf = FcnClassifier::untrained(12, 2, 0).unwrap();
    assert!(!clf.is_trained());
    let x = vec![0.0f32; 12];
    assert!(clf.extract_features(&[&x]).is_err());
    assert!(fid_1d(&clf, "d", "m", &[&x], &[&x]).is_err());
}

#[test]
fn training_needs_two_classes() {
    let x = vec![0.0f32; 8];
    assert!(train_fcn(&[&x, &x], &[0, 0], 2, &quick(1)).is_err());
    assert!(train_fcn(&[&x, &x], &[0, 1], 1, &quick(1)).is_err());
    assert!(train_fcn(&[&x, &x], &[0, 2], 2, &quick(1)).is_err());
}

/// Recomputes the classifier's logits layer by layer in f64.
fn direct_logits(clf: &FcnClassifier, x: &[f32]) -> Vec<f64> {
    let net = clf.network();
    let p = |name: &str| net.param(name).unwrap().to_vec();
    let buf = |name: &str| -> Vec<f32> { net.named_buffers().into_iter().find(|(n, _)| n == name).unwrap().1.to_vec() };
    let len = x.len();
    let mut h: Vec<Vec<f64>> = vec![x.iter().map(|&v| v as f64).collect()];
    for (layer, k) in [(0usize, 8usize), (3, 5), (6, 3)] {
        let w = p(&format!("{layer}.weight"));
        let b = p(&format!("{layer}.bias"));
        let (cin, cout) = (h.len(), b.len());
        let begin = (k - 1) / 2;
        let mut out = vec![vec![0.0; len]; cout];
        for o in 0..cout {
            for t in 0..len {
                let mut acc = b[o] as f64;
                for i in 0..cin {
                    for j in 0..k {
                        let pos = t as isize + j as isize - begin as isize;
                        if (0..len as isize).contains(&pos) {
                            acc += w[(o * cin + i) * k + j] as f64 * h[i][pos as usize];
                        }
                    }
                }
                out[o][t] = acc;
            }
        }
        let bn = layer + 1;
        let (gamma, beta) = (p(&format!("{bn}.gamma")), p(&format!("{bn}.beta")));
        let (mean, var) = (buf(&format!("{bn}.running_mean")), buf(&format!("{bn}.running_var")));
        for (c, row) in out.iter_mut().enumerate() {
            for v in row.iter_mut() {
                let y = (*v - mean[c] as f64) / (var[c] as f64 + 1e-5).sqrt() * gamma[c] as f64 + beta[c] as f64;
                *v = y.max(0.0);
            }
        }
        h = out;
    }
    let pooled: Vec<f64> = h.iter().map(|row| row.iter().sum::<f64>() / len as f64).collect();
    let w = p("10.weight");
    let b = p("10.bias");
    let k = b.len();
    (0..k)
        .map(|c| b[c] as f64 + pooled.iter().enumerate().map(|(i, v)| v * w[i * k + c] as f64).sum::<f64>())
        .collect()
}

#[test]
fn logits_match_a_direct_computation() {
    let ds = offset_dataset(6, 10, 4);
    let clf = train_real_classifier(&ds, &quick(2)).unwrap();
    for row in ds.signals.iter().take(3) {
        let got = &clf.logits(&[&row.values]).unwrap()[0];
        let want = direct_logits(&clf, &row.values);
        for (g, w) in got.iter().zip(&want) {
            assert!((*g as f64 - w).abs() <= 1e-3 * w.abs().max(1.0), "{g} vs {w}");
        }
    }
}

#[test]
fn tstr_on_copies_equals_trtr() {
    let ds = offset_dataset(8, 12, 5);
    let cfg = quick(3);
    let real = trtr(&ds, &cfg).unwrap();
    let copies = pool_from(ds.train_split(), 2);
    let synth = tstr(&ds, &copies, &cfg).unwrap();
    assert_eq!(synth.accuracy, real.accuracy);
    assert_eq!(synth.confusion, real.confusion);
    assert_eq!(synth.train_sizes, vec![4, 4]);
    assert_eq!(synth.test_sizes, vec![4, 4]);
    assert_eq!(synth.protocol, Protocol::Tstr);
}

#[test]
fn split_sizes_follow_the_real_splits() {
    // 50 train and 100 test series, as in a 50/100 archive split.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let rows: Vec<LabeledSeries> = (0..150)
        .map(|i| LabeledSeries {
            label: i % 2,
            values: (0..8).map(|_| (i % 2) as f32 + rng.random_range(-0.2f32..0.2)).collect(),
        })
        .collect();
    let ds = SignalDataset::new("split", rows, 50, vec!["0".into(), "1".into()]).unwrap();
    let pool: Vec<Vec<Vec<f32>>> = (0..2).map(|c| vec![vec![c as f32; 8]; 80]).collect();
    let cfg = quick(1);
    let clf = train_real_classifier(&ds, &cfg).unwrap();
    let s = tstr(&ds, &pool, &cfg).unwrap();
    assert_eq!(s.train_sizes, vec![25, 25]);
    assert_eq!(s.test_sizes, vec![50, 50]);
    let r = trts_with(&clf, &ds, &pool).unwrap();
    assert_eq!(r.train_sizes, vec![25, 25]);
    assert_eq!(r.test_sizes, vec![50, 50]);
    let short: Vec<Vec<Vec<f32>>> = (0..2).map(|c| vec![vec![c as f32; 8]; 20]).collect();
    assert!(trts_with(&clf, &ds, &short).is_err());
    assert!(tstr(&ds, &short, &cfg).is_err());
}

#[test]
fn constant_synthetic_data_scores_at_most_the_largest_prior() {
    let ds = offset_dataset(8, 12, 7);
    let clf = train_real_classifier(&ds, &quick(3)).unwrap();
    let zeros: Vec<Vec<Vec<f32>>> = (0..2).map(|_| vec![vec![0.0; 12]; 4]).collect();
    let r = trts_with(&clf, &ds, &zeros).unwrap();
    assert!(r.accuracy <= 50.0 + 1e-9, "{}", r.accuracy);
    let predicted_total: usize = r.confusion.iter().flatten().sum();
    assert_eq!(predicted_total, 8);
    let correct: usize = (0..2).map(|c| r.confusion[c][c]).sum();
    assert_eq!(r.accuracy, 100.0 * correct as f64 / 8.0);
    assert!((0.0..=100.0).contains(&r.accuracy));
}

fn scalar(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

#[test]
fn frechet_closed_forms() {
    let mu = DVector::from_vec(vec![0.3, -1.0, 2.0]);
    let s = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5]);
    assert!(frechet_distance(&mu, &s, &mu, &s).unwrap().abs() < 1e-6);

    let d = frechet_distance(&DVector::from_vec(vec![0.0]), &scalar(1.0), &DVector::from_vec(vec![2.0]), &scalar(1.0)).unwrap();
    assert!((d - 4.0).abs() < 1e-6, "{d}");

    let (m1, m2): ([f64; 3], [f64; 3]) = ([0.0, 1.0, -2.0], [1.0, 1.5, 0.0]);
    let (v1, v2): ([f64; 3], [f64; 3]) = ([1.0, 4.0, 0.25], [9.0, 1.0, 2.0]);
    let want: f64 = (0..3).map(|i| (m1[i] - m2[i]).powi(2) + v1[i] + v2[i] - 2.0 * (v1[i] * v2[i]).sqrt()).sum();
    let got = frechet_distance(
        &DVector::from_row_slice(&m1),
        &DMatrix::from_diagonal(&DVector::from_row_slice(&v1)),
        &DVector::from_row_slice(&m2),
        &DMatrix::from_diagonal(&DVector::from_row_slice(&v2)),
    )
    .unwrap();
    assert!((got - want).abs() < 1e-6, "{got} vs {want}");
}

#[test]
fn singular_covariances_are_regularized() {
    let z = DMatrix::zeros(2, 2);
    let d = frechet_distance(&DVector::from_vec(vec![0.0, 0.0]), &z, &DVector::from_vec(vec![3.0, 4.0]), &z).unwrap();
    assert!((d - 25.0).abs() < 1e-9);
}

#[test]
fn asymmetric_or_mismatched_covariances_are_rejected() {
    let mu = DVector::from_vec(vec![0.0, 0.0]);
    let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
    let good = DMatrix::identity(2, 2);
    assert!(frechet_distance(&mu, &bad, &mu, &good).is_err());
    assert!(frechet_distance(&mu, &good, &mu, &bad).is_err());
    assert!(frechet_distance(&mu, &DMatrix::identity(3, 3), &mu, &good).is_err());
    let nearly = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5 + 1e-9, 1.0]);
    assert!(frechet_distance(&mu, &nearly, &mu, &good).is_ok());
}

#[test]
fn moments_are_unbiased_and_order_free() {
    let rows = vec![vec![1.0, 2.0], vec![3.0, 0.0], vec![2.0, 4.0]];
    let m = feature_moments(&rows).unwrap();
    assert_eq!(m.count, 3);
    assert!((m.mean[0] - 2.0).abs() < 1e-12 && (m.mean[1] - 2.0).abs() < 1e-12);
    // Deviations (-1, 0), (1, -2), (0, 2) over n − 1 = 2.
    let want = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 4.0]);
    assert!((&m.cov - want).amax() < 1e-12);
    let mut shuffled = rows.clone();
    shuffled.reverse();
    let r = feature_moments(&shuffled).unwrap();
    assert!((&m.cov - r.cov).amax() < 1e-12);
    assert!(feature_moments(&[]).is_err());
    assert!(feature_moments(&[vec![1.0], vec![1.0, 2.0]]).is_err());
}

#[test]
fn fid_on_identical_series_is_zero() {
    let ds = offset_dataset(6, 12, 8);
    let clf = train_real_classifier(&ds, &quick(2)).unwrap();
    let real = refs(&ds.signals);
    let r = fid_1d(&clf, "offset", "copy", &real, &real).unwrap();
    assert!(r.fid <= 1e-6, "{}", r.fid);
    assert!(r.low_sample);
    assert_eq!(r.real.count, 12);
    let mut rev = real.clone();
    rev.reverse();
    let r2 = fid_1d(&clf, "offset", "copy", &real, &rev).unwrap();
    assert!(r2.fid <= 1e-6);
    assert!(fid_1d(&clf, "offset", "none", &real, &[]).is_err());
}

fn spd2(a: f64, b: f64, c: f64) -> DMatrix<f64> {
    // L·Lᵀ with L lower triangular and a positive diagonal.
    let l = DMatrix::from_row_slice(2, 2, &[a, 0.0, b, c]);
    &l * l.transpose()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// For 2×2 PSD matrices, `Tr((Σ₁Σ₂)^½) = sqrt(Tr(Σ₁Σ₂) + 2·sqrt(det(Σ₁Σ₂)))`.
    #[test]
    fn frechet_matches_the_two_by_two_formula(
        a in 0.2f64..3.0, b in -2.0f64..2.0, c in 0.2f64..3.0,
        d in 0.2f64..3.0, e in -2.0f64..2.0, f in 0.2f64..3.0,
        m in prop::collection::vec(-3.0f64..3.0, 4),
    ) {
        let (s1, s2) = (spd2(a, b, c), spd2(d, e, f));
        let p = &s1 * &s2;
        let tr_sqrt = (p.trace() + 2.0 * p.determinant().max(0.0).sqrt()).sqrt();
        let (mu1, mu2) = (DVector::from_row_slice(&m[..2]), DVector::from_row_slice(&m[2..]));
        let want = (&mu1 - &mu2).norm_squared() + s1.trace() + s2.trace() - 2.0 * tr_sqrt;
        let got = frechet_distance(&mu1, &s1, &mu2, &s2).unwrap();
        prop_assert!((got - want).abs() < 1e-6 * want.abs().max(1.0), "{} vs {}", got, want);
        let swapped = frechet_distance(&mu2, &s2, &mu1, &s1).unwrap();
        prop_assert!((got - swapped).abs() < 1e-6 * got.max(1.0));
        prop_assert!(got >= 0.0);
    }

    #[test]
    fn softmax_is_a_distribution(logits in prop::collection::vec(-50.0f32..50.0, 1..8)) {
        let p = softmax(&logits);
        prop_assert!((p.iter().map(|&v| v as f64).sum::<f64>() - 1.0).abs() < 1e-5);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}

fn classification(model: &str, protocol: Protocol, accuracy: f64) -> MetricRecord {
    MetricRecord::Classification {
        dataset: "toy".into(),
        model: model.into(),
        report: ClassificationReport {
            protocol,
            accuracy,
            confusion: vec![vec![1, 0], vec![0, 1]],
            train_sizes: vec![1, 1],
            test_sizes: vec![1, 1],
        },
    }
}

#[test]
fn table_rows_collect_the_five_accuracies() {
    let records = vec![
        classification("real", Protocol::Trtr, 97.5),
        classification("wgan-baseline", Protocol::Trts, 50.0),
        classification("tsgan", Protocol::Trts, 88.25),
        classification("wgan-baseline", Protocol::Tstr, 61.0),
    ];
    let row = TableRow::from_records("toy", &records);
    assert_eq!(row.cells(), ["toy", "50.00", "88.25", "61.00", "-", "97.50"].map(String::from));
    let text = render_table(&[row]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    for col in TABLE_COLUMNS {
        assert!(lines[0].contains(col));
    }
    assert_eq!(lines[2].split_whitespace().count(), 6);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.jsonl");
    save_metrics(&path, &records).unwrap();
    assert_eq!(load_metrics(&path).unwrap(), records);
    let first = std::fs::read_to_string(&path).unwrap();
    assert!(first.lines().next().unwrap().contains("\"kind\":\"classification\""));
    assert!(first.contains("\"protocol\":\"TRTR\""));
}
