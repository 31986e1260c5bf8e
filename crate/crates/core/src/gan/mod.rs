//! The two-stage spectrogram-conditioned WGAN and the single-stage baseline.

pub mod arch;
mod baseline;
pub mod checkpoint;
mod config;
mod log;
mod loss;
mod model;
mod train;

pub use baseline::BaselineModel;
pub use config::{Schedule, TsganConfig};
pub use log::{StageRecord, StepRecord, TrainLog};
pub use loss::{
    critic_loss_stage1, critic_loss_stage2, critic_objective, generator_loss_stage1, generator_loss_stage2, generator_objective, gradient_penalty,
    interpolate, CriticLoss, Penalty,
};
pub use model::{sample_synthetic, series_scale, ClassData, TsganModel, Wgan};
pub use train::{class_setup, run_training, train_baseline_class, train_tsgan_class, GanModel, TrainOutcome};
