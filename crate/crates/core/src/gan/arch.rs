//! Network layouts for the generators and critics.

use tsgan_nn::{LayerSpec, Network};

use super::config::TsganConfig;
use crate::error::{Error, Result};

/// Spatial size of the generator's image before it is resized to the
/// spectrogram shape.
pub const GENERATOR_CANVAS: usize = 32;

/// Kernel, stride and padding that roughly halve an axis (or keep it when it
/// is already a single cell), and the resulting extent.
fn halve(extent: usize) -> (usize, usize, usize, usize) {
    if extent >= 2 {
        (4, 2, 1, extent / 2)
    } else {
        (3, 1, 1, extent)
    }
}

/// Three downsampling conv2d blocks `c → w → 2w → 4w` with leaky ReLU.
/// Noise is injected after the first block. Returns the layers and the
/// flattened output size.
fn image_encoder(cfg: &TsganConfig, image: [usize; 3]) -> (Vec<LayerSpec>, usize) {
    let w = cfg.width;
    let mut layers = Vec::new();
    let (mut h, mut wd) = (image[1], image[2]);
    let mut channels = image[0];
    for (i, out) in [w, 2 * w, 4 * w].into_iter().enumerate() {
        let (kh, sh, ph, nh) = halve(h);
        let (kw, sw, pw, nw) = halve(wd);
        layers.push(LayerSpec::Conv2d {
            in_channels: channels,
            out_channels: out,
            kernel: [kh, kw],
            stride: [sh, sw],
            padding: [ph, pw],
        });
        layers.push(LayerSpec::LeakyRelu { slope: cfg.leaky_slope });
        if i == 0 {
            layers.push(LayerSpec::NoiseInject { stddev: cfg.noise_stddev });
        }
        channels = out;
        h = nh;
        wd = nw;
    }
    let flat = channels * h * wd;
    layers.push(LayerSpec::Reshape { shape: vec![flat] });
    (layers, flat)
}

/// `[4w, len/8] → [1, len]` through three transposed conv1d blocks.
fn series_decoder(cfg: &TsganConfig) -> Vec<LayerSpec> {
    let w = cfg.width;
    let mut layers = Vec::new();
    for (i, (cin, cout)) in [(4 * w, 2 * w), (2 * w, w), (w, 1)].into_iter().enumerate() {
        layers.push(LayerSpec::ConvTranspose1d {
            in_channels: cin,
            out_channels: cout,
            kernel: 4,
            stride: 2,
            padding: 1,
        });
        if i < 2 {
            layers.push(LayerSpec::BatchNorm { channels: cout });
            layers.push(LayerSpec::LeakyRelu { slope: cfg.leaky_slope });
        }
    }
    layers.push(LayerSpec::Tanh);
    layers
}

fn check_series_length(len: usize) -> Result<()> {
    if len == 0 || len % 8 != 0 {
        return Err(Error::config("signal_length", format!("series networks need a positive multiple of 8, got {len}")));
    }
    Ok(())
}

/// G: `[z_dim] → [3, H, W]` with values in `(0, 1)`.
pub fn spectrogram_generator(cfg: &TsganConfig, image: [usize; 3]) -> Result<Network> {
    let w = cfg.width;
    let s = GENERATOR_CANVAS / 8;
    let mut layers = vec![
        LayerSpec::Dense {
            inputs: cfg.z_dim,
            outputs: 4 * w * s * s,
        },
        LayerSpec::Reshape { shape: vec![4 * w, s, s] },
        LayerSpec::BatchNorm { channels: 4 * w },
        LayerSpec::LeakyRelu { slope: cfg.leaky_slope },
        LayerSpec::NoiseInject { stddev: cfg.noise_stddev },
    ];
    for (i, (cin, cout)) in [(4 * w, 2 * w), (2 * w, w), (w, image[0])].into_iter().enumerate() {
        layers.push(LayerSpec::ConvTranspose2d {
            in_channels: cin,
            out_channels: cout,
            kernel: [4, 4],
            stride: [2, 2],
            padding: [1, 1],
        });
        if i < 2 {
            layers.push(LayerSpec::BatchNorm { channels: cout });
            layers.push(LayerSpec::LeakyRelu { slope: cfg.leaky_slope });
        }
    }
    layers.push(LayerSpec::Sigmoid);
    if image[1] != GENERATOR_CANVAS || image[2] != GENERATOR_CANVAS {
        layers.push(LayerSpec::Resize2d {
            height: image[1],
            width: image[2],
        });
    }
    Ok(Network::new(&[cfg.z_dim], layers)?)
}

/// D_x: `[3, H, W] → [1]`.
pub fn spectrogram_critic(cfg: &TsganConfig, image: [usize; 3]) -> Result<Network> {
    let (mut layers, flat) = image_encoder(cfg, image);
    layers.push(LayerSpec::Dense { inputs: flat, outputs: 1 });
    Ok(Network::new(&image, layers)?)
}

/// F: `[3, H, W] → [1, len]` with values in `(-1, 1)`.
pub fn series_generator(cfg: &TsganConfig, image: [usize; 3], len: usize) -> Result<Network> {
    check_series_length(len)?;
    let w = cfg.width;
    let (mut layers, flat) = image_encoder(cfg, image);
    // Encoder noise sits in the critic position; the generator's own noise
    // goes on the bottleneck instead, where it acts as a latent.
    layers.retain(|l| !matches!(l, LayerSpec::NoiseInject { .. }));
    layers.extend([
        LayerSpec::Dense {
            inputs: flat,
            outputs: cfg.bottleneck,
        },
        LayerSpec::LeakyRelu { slope: cfg.leaky_slope },
        LayerSpec::NoiseInject {
            stddev: cfg.latent_noise_stddev,
        },
        LayerSpec::Dense {
            inputs: cfg.bottleneck,
            outputs: 4 * w * (len / 8),
        },
        LayerSpec::Reshape { shape: vec![4 * w, len / 8] },
        LayerSpec::BatchNorm { channels: 4 * w },
        LayerSpec::LeakyRelu { slope: cfg.leaky_slope },
    ]);
    layers.extend(series_decoder(cfg));
    Ok(Network::new(&image, layers)?)
}

/// D_y: `[1, len] → [1]`.
pub fn series_critic(cfg: &TsganConfig, len: usize) -> Result<Network> {
    check_series_length(len)?;
    let w = cfg.width;
    let mut layers = Vec::new();
    for (i, (cin, cout)) in [(1, w), (w, 2 * w), (2 * w, 4 * w)].into_iter().enumerate() {
        layers.push(LayerSpec::Conv1d {
            in_channels: cin,
            out_channels: cout,
            kernel: 4,
            stride: 2,
            padding: (1, 1),
        });
        layers.push(LayerSpec::LeakyRelu { slope: cfg.leaky_slope });
        if i == 0 {
            layers.push(LayerSpec::NoiseInject { stddev: cfg.noise_stddev });
        }
    }
    let flat = 4 * w * (len / 8);
    layers.push(LayerSpec::Reshape { shape: vec![flat] });
    layers.push(LayerSpec::Dense { inputs: flat, outputs: 1 });
    Ok(Network::new(&[1, len], layers)?)
}

/// Baseline generator: `[z_dim] → [1, len]` without the spectrogram stage.
pub fn direct_series_generator(cfg: &TsganConfig, len: usize) -> Result<Network> {
    check_series_length(len)?;
    let w = cfg.width;
    let mut layers = vec![
        LayerSpec::Dense {
            inputs: cfg.z_dim,
            outputs: 4 * w * (len / 8),
        },
        LayerSpec::Reshape { shape: vec![4 * w, len / 8] },
        LayerSpec::BatchNorm { channels: 4 * w },
        LayerSpec::LeakyRelu { slope: cfg.leaky_slope },
        LayerSpec::NoiseInject { stddev: cfg.noise_stddev },
    ];
    layers.extend(series_decoder(cfg));
    Ok(Network::new(&[cfg.z_dim], layers)?)
}
