//! Dataset ingest, normalization and spectrogram images.

mod dataset;
mod stft;
mod toy;

pub use dataset::{dataset_name, load_dataset, read_rows, size_category, standardize_length, write_rows, znormalize, LabeledSeries, SignalDataset, SizeCategory};
pub use stft::{dft, spectrogram_batch, stft_spectrogram, SpectrogramImage, StftConfig, WindowKind, SPECTROGRAM_CHANNELS};
pub use toy::toy_sine_square;

/// Length every series is resampled to: the native length rounded up to a
/// multiple of both the hop and 8 (the series networks halve it three times).
pub fn working_length(native: usize, cfg: &StftConfig) -> usize {
    let unit = lcm(cfg.hop, 8);
    native.max(cfg.window_length).div_ceil(unit) * unit
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    a / gcd(a, b) * b
}
