use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use tsgan_autograd::Tensor;

use crate::error::{Error, Result};

pub const SPECTROGRAM_CHANNELS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum WindowKind {
    Hann,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StftConfig {
    pub window_length: usize,
    pub hop: usize,
    pub fft_size: usize,
    pub window: WindowKind,
    pub log_floor_db: f32,
}

impl Default for StftConfig {
    fn default() -> Self {
        StftConfig {
            window_length: 32,
            hop: 8,
            fft_size: 64,
            window: WindowKind::Hann,
            log_floor_db: -80.0,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Stft(msg.to_string()));
        if self.hop == 0 || self.hop > self.window_length || self.window_length > self.fft_size {
            return bad("need 0 < hop <= window_length <= fft_size");
        }
        if !self.fft_size.is_power_of_two() {
            return bad("fft_size must be a power of two");
        }
        if !(self.log_floor_db < 0.0) {
            return bad("log floor must be negative dB");
        }
        Ok(())
    }

    /// Frequency bins, the image height.
    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Time frames for a series of `len` samples, the image width.
    pub fn frames(&self, len: usize) -> Option<usize> {
        (len >= self.window_length).then(|| (len - self.window_length) / self.hop + 1)
    }

    pub fn image_shape(&self, len: usize) -> Option<[usize; 3]> {
        Some([SPECTROGRAM_CHANNELS, self.bins(), self.frames(len)?])
    }

    fn window_values(&self) -> Vec<f32> {
        let n = self.window_length;
        match self.window {
            // Periodic Hann, the usual choice for spectral analysis.
            WindowKind::Hann => (0..n)
                .map(|i| (0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()) as f32)
                .collect(),
        }
    }
}

/// Three identical channels of a `height × width` map in `[0, 1]`, stored
/// channel-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrogramImage {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl SpectrogramImage {
    pub fn shape(&self) -> [usize; 3] {
        [SPECTROGRAM_CHANNELS, self.height, self.width]
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let plane = self.height * self.width;
        &self.data[c * plane..(c + 1) * plane]
    }

    pub fn at(&self, c: usize, bin: usize, frame: usize) -> f32 {
        self.data[(c * self.height + bin) * self.width + frame]
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::from_vec(&self.shape(), self.data.clone()).expect("consistent image")
    }
}

/// Unnormalized DFT, `X[k] = Σ x[n] e^{-2πi kn/N}`.
pub fn dft(frame: &[f32]) -> Vec<Complex<f32>> {
    let mut buf: Vec<Complex<f32>> = frame.iter().map(|&v| Complex::new(v, 0.0)).collect();
    if !buf.is_empty() {
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    }
    buf
}

/// Magnitude STFT in decibels relative to the loudest bin, floored, then
/// min-max scaled into `[0, 1]` and replicated to three channels.
pub fn stft_spectrogram(series: &[f32], cfg: &StftConfig) -> Result<SpectrogramImage> {
    cfg.validate()?;
    let frames = cfg
        .frames(series.len())
        .ok_or_else(|| Error::Stft(format!("series of {} samples is shorter than the {}-sample window", series.len(), cfg.window_length)))?;
    let bins = cfg.bins();
    let window = cfg.window_values();
    let fft = FftPlanner::new().plan_fft_forward(cfg.fft_size);
    let mut buf = vec![Complex::new(0.0f32, 0.0); cfg.fft_size];
    // Bin-major magnitudes: mags[bin * frames + frame].
    let mut mags = vec![0.0f32; bins * frames];
    for f in 0..frames {
        let start = f * cfg.hop;
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for (i, (&x, &w)) in series[start..start + cfg.window_length].iter().zip(&window).enumerate() {
            buf[i].re = x * w;
        }
        fft.process(&mut buf);
        for b in 0..bins {
            mags[b * frames + f] = buf[b].norm();
        }
    }

    let peak = mags.iter().copied().fold(0.0f32, f32::max);
    let mut plane = vec![0.0f32; bins * frames];
    if peak > 0.0 {
        let floor = cfg.log_floor_db;
        for (p, &m) in plane.iter_mut().zip(&mags) {
            *p = if m > 0.0 { (20.0 * (m / peak).log10()).max(floor) } else { floor };
        }
        let lo = plane.iter().copied().fold(f32::INFINITY, f32::min);
        let hi = plane.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        if hi > lo {
            plane.iter_mut().for_each(|p| *p = ((*p - lo) / (hi - lo)).clamp(0.0, 1.0));
        } else {
            plane.fill(0.0);
        }
    }
    let mut data = Vec::with_capacity(SPECTROGRAM_CHANNELS * plane.len());
    for _ in 0..SPECTROGRAM_CHANNELS {
        data.extend_from_slice(&plane);
    }
    Ok(SpectrogramImage {
        height: bins,
        width: frames,
        data,
    })
}

/// Spectrograms of equal-length series stacked into `[n, 3, bins, frames]`.
pub fn spectrogram_batch(series: &[&[f32]], cfg: &StftConfig) -> Result<Tensor> {
    let len = series.first().map_or(0, |s| s.len());
    let shape = cfg.image_shape(len).ok_or_else(|| Error::Stft("series shorter than one window".into()))?;
    let mut data = Vec::with_capacity(series.len() * shape.iter().product::<usize>());
    for s in series {
        if s.len() != len {
            return Err(Error::Stft("series in a batch must share a length".into()));
        }
        data.extend(stft_spectrogram(s, cfg)?.data);
    }
    Ok(Tensor::from_vec(&[series.len(), shape[0], shape[1], shape[2]], data)?)
}
