//! Two-stage Wasserstein GAN for univariate time series.
//!
//! Stage 1 maps Gaussian noise to a spectrogram image; stage 2 maps that
//! image to a series. Both stages train as WGANs with gradient penalty.
//! The crate also carries the evaluation stack (an FCN classifier, a 1D
//! Fréchet distance over its features, TSTR/TRTS/TRTR accuracy) and an
//! experiment layer that trains, samples, evaluates and plots.

pub mod error;
pub mod eval;
pub mod experiment;
pub mod gan;
pub mod kv;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};
