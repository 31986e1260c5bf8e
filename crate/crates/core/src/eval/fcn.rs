use rand::seq::SliceRandom;
use tsgan_autograd::{backward, Tensor};
use tsgan_nn::{AdamConfig, AdamState, LayerSpec, Mode, Network};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// Width of the pooled embedding used for FID.
pub const FCN_FEATURES: usize = 128;
/// Layers up to and including global average pooling.
const FEATURE_DEPTH: usize = 10;
/// Inference batch size; only bounds memory.
const EVAL_CHUNK: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct FcnConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for FcnConfig {
    fn default() -> Self {
        FcnConfig {
            epochs: 200,
            batch_size: 16,
            adam: AdamConfig::classifier(),
            seed: 0,
        }
    }
}

/// Fully convolutional classifier: three conv/batch-norm/ReLU blocks
/// (128×8, 256×5, 128×3, same padding), global average pooling and a dense
/// softmax head.
#[derive(Clone, Debug)]
pub struct FcnClassifier {
    net: Network,
    class_count: usize,
    signal_length: usize,
    trained: bool,
}

pub fn fcn_network(signal_length: usize, class_count: usize) -> Result<Network> {
    let specs = vec![
        LayerSpec::conv1d_same(1, 128, 8),
        LayerSpec::BatchNorm { channels: 128 },
        LayerSpec::Relu,
        LayerSpec::conv1d_same(128, 256, 5),
        LayerSpec::BatchNorm { channels: 256 },
        LayerSpec::Relu,
        LayerSpec::conv1d_same(256, FCN_FEATURES, 3),
        LayerSpec::BatchNorm { channels: FCN_FEATURES },
        LayerSpec::Relu,
        LayerSpec::GlobalAvgPool,
        LayerSpec::Dense {
            inputs: FCN_FEATURES,
            outputs: class_count,
        },
    ];
    Ok(Network::new(&[1, signal_length], specs)?)
}

fn batch_tensor(series: &[&[f32]], length: usize) -> Result<Tensor> {
    if let Some(bad) = series.iter().find(|s| s.len() != length) {
        return Err(Error::Eval(format!("series of length {} given to a classifier for length {length}", bad.len())));
    }
    let data = series.iter().flat_map(|s| s.iter().copied()).collect();
    Ok(Tensor::from_vec(&[series.len(), 1, length], data)?)
}

/// Trains a classifier on labeled series.
///
/// Rows are regrouped stably by label before training, so two pools holding
/// the same series per class train identical networks regardless of how the
/// classes were interleaved.
pub fn train_fcn(series: &[&[f32]], labels: &[usize], class_count: usize, cfg: &FcnConfig) -> Result<FcnClassifier> {
    if series.len() != labels.len() {
        return Err(Error::Eval(format!("{} series but {} labels", series.len(), labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
        return Err(Error::Eval(format!("label {bad} outside 0..{class_count}")));
    }
    let mut present = vec![false; class_count];
    labels.iter().for_each(|&l| present[l] = true);
    if present.iter().filter(|&&p| p).count() < 2 || class_count < 2 {
        return Err(Error::Eval("classifier training needs at least two classes".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::config("eval_batch_size", "must be positive"));
    }
    let length = series[0].len();
    let mut order: Vec<usize> = (0..series.len()).collect();
    order.sort_by_key(|&i| labels[i]);
    let series: Vec<&[f32]> = order.iter().map(|&i| series[i]).collect();
    let labels: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
    let x_all = batch_tensor(&series, length)?;

    let mut net = fcn_network(length, class_count)?.initialized(cfg.seed);
    let mut adam = AdamState::new(cfg.adam);
    let n = series.len();
    for epoch in 0..cfg.epochs {
        let mut rng = stream(cfg.seed, 0, Purpose::Classifier, epoch as u64);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        for batch in batches(&idx, cfg.batch_size) {
            let x = gather_rows(&x_all, batch)?;
            let y: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let logits = net.forward(&x, Mode::Train(&mut rng))?;
            let loss = logits.softmax_cross_entropy(&y)?;
            if !loss.item()?.is_finite() {
                return Err(Error::NonFinite {
                    what: "classifier loss".into(),
                    step: epoch as u64,
                });
            }
            let grads = backward(&loss, &net.params())?;
            adam.step(&mut net, &grads)?;
        }
    }
    Ok(FcnClassifier {
        net,
        class_count,
        signal_length: length,
        trained: true,
    })
}

/// Mini-batches over `idx`; a trailing batch of one sample joins the batch
/// before it, since batch statistics of a single sample are degenerate.
fn batches(idx: &[usize], size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = Vec::new();
    let mut start = 0;
    while start < idx.len() {
        let mut end = (start + size).min(idx.len());
        if idx.len() - end == 1 {
            end += 1;
        }
        out.push(&idx[start..end]);
        start = end;
    }
    out
}

fn gather_rows(x: &Tensor, rows: &[usize]) -> Result<Tensor> {
    let per: usize = x.shape()[1..].iter().product();
    let mut shape = x.shape().to_vec();
    shape[0] = rows.len();
    let data = rows.iter().flat_map(|&r| x.data()[r * per..(r + 1) * per].iter().copied()).collect();
    Ok(Tensor::from_vec(&shape, data)?)
}

impl FcnClassifier {
    /// An untrained classifier; useful only as a feature network that must
    /// be rejected.
    pub fn untrained(signal_length: usize, class_count: usize, seed: u64) -> Result<Self> {
        Ok(FcnClassifier {
            net: fcn_network(signal_length, class_count)?.initialized(seed),
            class_count,
            signal_length,
            trained: false,
        })
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn signal_length(&self) -> usize {
        self.signal_length
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    fn run(&self, series: &[&[f32]], depth: usize) -> Result<Vec<Vec<f32>>> {
        let mut out = Vec::with_capacity(series.len());
        for chunk in series.chunks(EVAL_CHUNK) {
            let y = self.net.forward_eval_until(&batch_tensor(chunk, self.signal_length)?, depth)?;
            let width = y.numel() / chunk.len();
            out.extend(y.data().chunks(width).map(<[f32]>::to_vec));
        }
        Ok(out)
    }

    pub fn logits(&self, series: &[&[f32]]) -> Result<Vec<Vec<f32>>> {
        self.run(series, usize::MAX)
    }

    /// Row-wise class probabilities.
    pub fn probabilities(&self, series: &[&[f32]]) -> Result<Vec<Vec<f32>>> {
        Ok(self.logits(series)?.into_iter().map(|row| softmax(&row)).collect())
    }

    pub fn predict(&self, series: &[&[f32]]) -> Result<Vec<usize>> {
        Ok(self
            .logits(series)?
            .iter()
            .map(|row| {
                // First maximum wins, so ties resolve to the lower class id.
                row.iter().enumerate().fold(0, |best, (i, &v)| if v > row[best] { i } else { best })
            })
            .collect())
    }

    /// Global-average-pool activations, one row of width 128 per series.
    pub fn extract_features(&self, series: &[&[f32]]) -> Result<Vec<Vec<f32>>> {
        if !self.trained {
            return Err(Error::Eval("features requested from an untrained classifier".into()));
        }
        self.run(series, FEATURE_DEPTH)
    }
}

/// Numerically stable softmax in f64.
pub fn softmax(logits: &[f32]) -> Vec<f32> {
    let max = logits.iter().fold(f32::NEG_INFINITY, |a, &b| a.max(b)) as f64;
    let exps: Vec<f64> = logits.iter().map(|&v| (v as f64 - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| (e / total) as f32).collect()
}
