use std::path::{Path, PathBuf};

use tsgan_autograd::Tensor;

use super::baseline::BaselineModel;
use super::checkpoint;
use super::config::TsganConfig;
use super::log::{StepRecord, TrainLog};
use super::model::{series_scale, ClassData, TsganModel};
use crate::error::{Error, Result};
use crate::signal::SignalDataset;

/// What the training driver needs from a model.
pub trait GanModel: Sized {
    const KIND: &'static str;
    fn create(config: &TsganConfig, class: usize, signal_length: usize, series_scale: f32) -> Result<Self>;
    fn next_step(&mut self, data: &ClassData, planned: u64) -> Result<Option<StepRecord>>;
    fn steps_done(&self) -> u64;
    fn config(&self) -> &TsganConfig;
    fn config_mut(&mut self) -> &mut TsganConfig;
    fn sample(&self, n: usize, seed: u64) -> Result<Vec<Vec<f32>>>;
    /// Samples plus the conditioning spectrograms behind them, for models
    /// that have any.
    fn sample_with_conditions(&self, n: usize, seed: u64) -> Result<(Vec<Vec<f32>>, Option<Tensor>)> {
        Ok((self.sample(n, seed)?, None))
    }
    fn save(&self, dir: &Path) -> Result<Vec<PathBuf>>;
    fn load(dir: &Path) -> Result<Self>;
}

impl GanModel for TsganModel {
    const KIND: &'static str = "tsgan";
    fn create(config: &TsganConfig, class: usize, signal_length: usize, series_scale: f32) -> Result<Self> {
        TsganModel::new(config, class, signal_length, series_scale)
    }
    fn next_step(&mut self, data: &ClassData, planned: u64) -> Result<Option<StepRecord>> {
        TsganModel::next_step(self, data, planned)
    }
    fn steps_done(&self) -> u64 {
        TsganModel::steps_done(self)
    }
    fn config(&self) -> &TsganConfig {
        &self.config
    }
    fn config_mut(&mut self) -> &mut TsganConfig {
        &mut self.config
    }
    fn sample(&self, n: usize, seed: u64) -> Result<Vec<Vec<f32>>> {
        TsganModel::sample(self, n, seed)
    }
    fn sample_with_conditions(&self, n: usize, seed: u64) -> Result<(Vec<Vec<f32>>, Option<Tensor>)> {
        TsganModel::sample_with_conditions(self, n, seed)
    }
    fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        checkpoint::save_tsgan(self, dir)
    }
    fn load(dir: &Path) -> Result<Self> {
        checkpoint::load_tsgan(dir)
    }
}

impl GanModel for BaselineModel {
    const KIND: &'static str = "wgan-baseline";
    fn create(config: &TsganConfig, class: usize, signal_length: usize, series_scale: f32) -> Result<Self> {
        BaselineModel::new(config, class, signal_length, series_scale)
    }
    fn next_step(&mut self, data: &ClassData, planned: u64) -> Result<Option<StepRecord>> {
        BaselineModel::next_step(self, data, planned)
    }
    fn steps_done(&self) -> u64 {
        self.steps
    }
    fn config(&self) -> &TsganConfig {
        &self.config
    }
    fn config_mut(&mut self) -> &mut TsganConfig {
        &mut self.config
    }
    fn sample(&self, n: usize, seed: u64) -> Result<Vec<Vec<f32>>> {
        BaselineModel::sample(self, n, seed)
    }
    fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        checkpoint::save_baseline(self, dir)
    }
    fn load(dir: &Path) -> Result<Self> {
        checkpoint::load_baseline(dir)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainOutcome {
    pub log: TrainLog,
    /// Diagnostic for a run stopped by a non-finite loss.
    pub aborted: Option<String>,
}

/// Steps `model` until `planned` steps per stage are done, calling
/// `after_step` after each one. A non-finite loss stops the loop and is
/// reported through the returned diagnostic rather than as an error.
pub fn run_training<M: GanModel>(
    model: &mut M,
    data: &ClassData,
    planned: u64,
    log: &mut TrainLog,
    mut after_step: impl FnMut(&M, &TrainLog) -> Result<()>,
) -> Result<Option<String>> {
    loop {
        match model.next_step(data, planned) {
            Ok(Some(record)) => {
                log.push(record);
                after_step(model, log)?;
            }
            Ok(None) => return Ok(None),
            Err(e @ Error::NonFinite { .. }) => return Ok(Some(e.to_string())),
            Err(e) => return Err(e),
        }
    }
}

/// Training tensors and the model skeleton for one class of a standardized
/// dataset.
pub fn class_setup<M: GanModel>(dataset: &SignalDataset, class: usize, config: &TsganConfig) -> Result<(M, ClassData)> {
    let series = dataset.class_series(class);
    if series.is_empty() {
        return Err(Error::Dataset(format!("class {class} has no signals")));
    }
    let scale = series_scale(&series);
    let data = ClassData::new(&series, &config.stft, scale)?;
    let model = M::create(config, class, dataset.signal_length, scale)?;
    Ok((model, data))
}

fn train_class<M: GanModel>(dataset: &SignalDataset, class: usize, config: &TsganConfig) -> Result<(M, TrainOutcome)> {
    let (mut model, data) = class_setup::<M>(dataset, class, config)?;
    let planned = config.planned_steps(data.len());
    let mut log = TrainLog::default();
    let aborted = run_training(&mut model, &data, planned, &mut log, |_, _| Ok(()))?;
    Ok((model, TrainOutcome { log, aborted }))
}

/// Trains the two-stage model on one class of a standardized dataset.
pub fn train_tsgan_class(dataset: &SignalDataset, class: usize, config: &TsganConfig) -> Result<(TsganModel, TrainOutcome)> {
    train_class(dataset, class, config)
}

/// Trains the single-stage baseline on one class of a standardized dataset.
pub fn train_baseline_class(dataset: &SignalDataset, class: usize, config: &TsganConfig) -> Result<(BaselineModel, TrainOutcome)> {
    train_class(dataset, class, config)
}
