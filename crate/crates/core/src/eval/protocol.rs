use serde::{Deserialize, Serialize};

use super::fcn::{train_fcn, FcnClassifier, FcnConfig};
use crate::error::{Error, Result};
use crate::signal::{LabeledSeries, SignalDataset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Protocol {
    /// Train on synthetic, test on real.
    Tstr,
    /// Train on real, test on synthetic.
    Trts,
    /// Train on real, test on real.
    Trtr,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Tstr => "TSTR",
            Protocol::Trts => "TRTS",
            Protocol::Trtr => "TRTR",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub protocol: Protocol,
    /// Percent correct, in `[0, 100]`.
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub train_sizes: Vec<usize>,
    pub test_sizes: Vec<usize>,
}

impl ClassificationReport {
    fn new(protocol: Protocol, class_count: usize, truth: &[usize], predicted: &[usize], train_sizes: Vec<usize>) -> Self {
        let mut confusion = vec![vec![0; class_count]; class_count];
        for (&t, &p) in truth.iter().zip(predicted) {
            confusion[t][p] += 1;
        }
        let correct: usize = (0..class_count).map(|c| confusion[c][c]).sum();
        let test_sizes = confusion.iter().map(|row| row.iter().sum()).collect();
        let accuracy = if truth.is_empty() { 0.0 } else { 100.0 * correct as f64 / truth.len() as f64 };
        ClassificationReport {
            protocol,
            accuracy,
            confusion,
            train_sizes,
            test_sizes,
        }
    }
}

/// Synthetic series per class id, as produced by a generator.
pub type SyntheticPool = [Vec<Vec<f32>>];

fn split_parts(rows: &[LabeledSeries]) -> (Vec<&[f32]>, Vec<usize>) {
    rows.iter().map(|r| (r.values.as_slice(), r.label)).unzip()
}

/// The first `counts[c]` synthetic series of every class, in class order.
fn take_synthetic<'a>(pool: &'a SyntheticPool, counts: &[usize]) -> Result<(Vec<&'a [f32]>, Vec<usize>)> {
    if pool.len() != counts.len() {
        return Err(Error::Eval(format!("synthetic pool has {} classes, dataset has {}", pool.len(), counts.len())));
    }
    let mut series = Vec::new();
    let mut labels = Vec::new();
    for (c, (class_pool, &need)) in pool.iter().zip(counts).enumerate() {
        if class_pool.len() < need {
            return Err(Error::Eval(format!("synthetic pool for class {c} holds {} series, {need} needed", class_pool.len())));
        }
        series.extend(class_pool[..need].iter().map(Vec::as_slice));
        labels.extend(std::iter::repeat_n(c, need));
    }
    Ok((series, labels))
}

/// Classifier trained on the real train split; shared by TRTR, TRTS and FID.
pub fn train_real_classifier(dataset: &SignalDataset, cfg: &FcnConfig) -> Result<FcnClassifier> {
    let (series, labels) = split_parts(dataset.train_split());
    train_fcn(&series, &labels, dataset.class_count, cfg)
}

fn score(clf: &FcnClassifier, protocol: Protocol, series: &[&[f32]], truth: &[usize], train_sizes: Vec<usize>) -> Result<ClassificationReport> {
    let predicted = clf.predict(series)?;
    Ok(ClassificationReport::new(protocol, clf.class_count(), truth, &predicted, train_sizes))
}

/// Real-classifier accuracy on the real test split.
pub fn trtr_with(clf: &FcnClassifier, dataset: &SignalDataset) -> Result<ClassificationReport> {
    let (series, labels) = split_parts(dataset.test_split());
    let train_sizes = SignalDataset::class_counts(dataset.train_split(), dataset.class_count);
    score(clf, Protocol::Trtr, &series, &labels, train_sizes)
}

pub fn trtr(dataset: &SignalDataset, cfg: &FcnConfig) -> Result<ClassificationReport> {
    trtr_with(&train_real_classifier(dataset, cfg)?, dataset)
}

/// Real-classifier accuracy on synthetic series, as many per class as the
/// real test split holds.
pub fn trts_with(clf: &FcnClassifier, dataset: &SignalDataset, synthetic: &SyntheticPool) -> Result<ClassificationReport> {
    let counts = SignalDataset::class_counts(dataset.test_split(), dataset.class_count);
    let (series, labels) = take_synthetic(synthetic, &counts)?;
    let train_sizes = SignalDataset::class_counts(dataset.train_split(), dataset.class_count);
    score(clf, Protocol::Trts, &series, &labels, train_sizes)
}

pub fn trts(dataset: &SignalDataset, synthetic: &SyntheticPool, cfg: &FcnConfig) -> Result<ClassificationReport> {
    trts_with(&train_real_classifier(dataset, cfg)?, dataset, synthetic)
}

/// Trains on synthetic series, as many per class as the real train split
/// holds, and scores on the real test split.
pub fn tstr(dataset: &SignalDataset, synthetic: &SyntheticPool, cfg: &FcnConfig) -> Result<ClassificationReport> {
    let counts = SignalDataset::class_counts(dataset.train_split(), dataset.class_count);
    let (series, labels) = take_synthetic(synthetic, &counts)?;
    let clf = train_fcn(&series, &labels, dataset.class_count, cfg)?;
    let (test, truth) = split_parts(dataset.test_split());
    score(&clf, Protocol::Tstr, &test, &truth, counts)
}
