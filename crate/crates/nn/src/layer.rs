use tsgan_autograd::ConvGeom;

use crate::error::{NnError, Result};

/// One layer of a [`Network`](crate::Network). Shapes are per sample; the
/// batch axis is implicit.
#[derive(Clone, Debug, PartialEq)]
pub enum LayerSpec {
    /// `[in] -> [out]`
    Dense { inputs: usize, outputs: usize },
    /// `[c, l] -> [o, l']`; padding is `(begin, end)`.
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: (usize, usize),
    },
    /// `[c, h, w] -> [o, h', w']`; symmetric padding per axis.
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: [usize; 2],
        stride: [usize; 2],
        padding: [usize; 2],
    },
    ConvTranspose1d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    ConvTranspose2d {
        in_channels: usize,
        out_channels: usize,
        kernel: [usize; 2],
        stride: [usize; 2],
        padding: [usize; 2],
    },
    LeakyRelu { slope: f32 },
    Relu,
    Tanh,
    Sigmoid,
    /// Normalizes over the batch and every spatial axis, per channel (axis 0
    /// of the per-sample shape).
    BatchNorm { channels: usize },
    /// `[c, ...spatial] -> [c]`
    GlobalAvgPool,
    Reshape { shape: Vec<usize> },
    /// Additive Gaussian noise in training mode; identity at inference.
    NoiseInject { stddev: f32 },
    /// Bilinear resize of `[c, h, w]` to `[c, height, width]`.
    Resize2d { height: usize, width: usize },
}

pub const BATCH_NORM_EPS: f32 = 1e-5;
pub const BATCH_NORM_MOMENTUM: f32 = 0.1;

impl LayerSpec {
    pub fn conv1d_same(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        let total = kernel - 1;
        LayerSpec::Conv1d {
            in_channels,
            out_channels,
            kernel,
            stride: 1,
            padding: (total / 2, total - total / 2),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Conv1d { .. } => "conv1d",
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::ConvTranspose1d { .. } => "transposed-conv1d",
            LayerSpec::ConvTranspose2d { .. } => "transposed-conv2d",
            LayerSpec::LeakyRelu { .. } => "leaky-relu",
            LayerSpec::Relu => "relu",
            LayerSpec::Tanh => "tanh",
            LayerSpec::Sigmoid => "sigmoid",
            LayerSpec::BatchNorm { .. } => "batch-norm",
            LayerSpec::GlobalAvgPool => "global-avg-pool",
            LayerSpec::Reshape { .. } => "reshape",
            LayerSpec::NoiseInject { .. } => "noise-inject",
            LayerSpec::Resize2d { .. } => "resize2d",
        }
    }

    pub(crate) fn geom(&self) -> Option<ConvGeom> {
        match *self {
            LayerSpec::Conv1d { kernel, stride, padding, .. } => Some(ConvGeom::new1d(kernel, stride, padding.0, padding.1)),
            LayerSpec::ConvTranspose1d { kernel, stride, padding, .. } => {
                Some(ConvGeom::new1d(kernel, stride, padding, padding))
            }
            LayerSpec::Conv2d { kernel, stride, padding, .. } | LayerSpec::ConvTranspose2d { kernel, stride, padding, .. } => {
                Some(ConvGeom::new2d(kernel, stride, padding))
            }
            _ => None,
        }
    }

    /// Names and shapes of the trainable parameters, in a fixed order.
    pub(crate) fn param_shapes(&self) -> Vec<(&'static str, Vec<usize>)> {
        match *self {
            LayerSpec::Dense { inputs, outputs } => vec![("weight", vec![inputs, outputs]), ("bias", vec![outputs])],
            LayerSpec::Conv1d { in_channels, out_channels, kernel, .. } => {
                vec![("weight", vec![out_channels, in_channels, kernel]), ("bias", vec![out_channels])]
            }
            LayerSpec::Conv2d { in_channels, out_channels, kernel, .. } => vec![
                ("weight", vec![out_channels, in_channels, kernel[0], kernel[1]]),
                ("bias", vec![out_channels]),
            ],
            LayerSpec::ConvTranspose1d { in_channels, out_channels, kernel, .. } => {
                vec![("weight", vec![in_channels, out_channels, kernel]), ("bias", vec![out_channels])]
            }
            LayerSpec::ConvTranspose2d { in_channels, out_channels, kernel, .. } => vec![
                ("weight", vec![in_channels, out_channels, kernel[0], kernel[1]]),
                ("bias", vec![out_channels]),
            ],
            LayerSpec::BatchNorm { channels } => vec![("gamma", vec![channels]), ("beta", vec![channels])],
            _ => vec![],
        }
    }

    /// Per-sample output shape for a per-sample input shape.
    pub(crate) fn output_shape(&self, index: usize, input: &[usize]) -> Result<Vec<usize>> {
        let kind = self.kind();
        let bad = |msg: String| NnError::InvalidSpec { index, kind, msg };
        let expect_rank = |r: usize| {
            if input.len() == r {
                Ok(())
            } else {
                Err(bad(format!("expects rank-{r} samples, got {input:?}")))
            }
        };
        let positive = |vals: &[usize]| {
            if vals.iter().all(|&v| v > 0) {
                Ok(())
            } else {
                Err(bad("channel, kernel and stride extents must be positive".into()))
            }
        };
        match self {
            LayerSpec::Dense { inputs, outputs } => {
                positive(&[*inputs, *outputs])?;
                if input != [*inputs] {
                    return Err(bad(format!("expects [{inputs}], got {input:?}")));
                }
                Ok(vec![*outputs])
            }
            LayerSpec::Conv1d { in_channels, out_channels, kernel, stride, .. } => {
                positive(&[*in_channels, *out_channels, *kernel, *stride])?;
                expect_rank(2)?;
                if input[0] != *in_channels {
                    return Err(bad(format!("expects {in_channels} channels, got {}", input[0])));
                }
                let [_, l] = self
                    .geom()
                    .and_then(|g| g.out_extent([1, input[1]]))
                    .ok_or_else(|| bad(format!("length {} too short for kernel {kernel}", input[1])))?;
                Ok(vec![*out_channels, l])
            }
            LayerSpec::Conv2d { in_channels, out_channels, kernel, stride, .. } => {
                positive(&[*in_channels, *out_channels, kernel[0], kernel[1], stride[0], stride[1]])?;
                expect_rank(3)?;
                if input[0] != *in_channels {
                    return Err(bad(format!("expects {in_channels} channels, got {}", input[0])));
                }
                let [h, w] = self
                    .geom()
                    .and_then(|g| g.out_extent([input[1], input[2]]))
                    .ok_or_else(|| bad(format!("input {input:?} too small for kernel {kernel:?}")))?;
                Ok(vec![*out_channels, h, w])
            }
            LayerSpec::ConvTranspose1d { in_channels, out_channels, kernel, stride, .. } => {
                positive(&[*in_channels, *out_channels, *kernel, *stride])?;
                expect_rank(2)?;
                if input[0] != *in_channels {
                    return Err(bad(format!("expects {in_channels} channels, got {}", input[0])));
                }
                let [_, l] = self
                    .geom()
                    .and_then(|g| g.transposed_extent([1, input[1]]))
                    .ok_or_else(|| bad("padding consumes the whole output".into()))?;
                Ok(vec![*out_channels, l])
            }
            LayerSpec::ConvTranspose2d { in_channels, out_channels, kernel, stride, .. } => {
                positive(&[*in_channels, *out_channels, kernel[0], kernel[1], stride[0], stride[1]])?;
                expect_rank(3)?;
                if input[0] != *in_channels {
                    return Err(bad(format!("expects {in_channels} channels, got {}", input[0])));
                }
                let [h, w] = self
                    .geom()
                    .and_then(|g| g.transposed_extent([input[1], input[2]]))
                    .ok_or_else(|| bad("padding consumes the whole output".into()))?;
                Ok(vec![*out_channels, h, w])
            }
            LayerSpec::BatchNorm { channels } => {
                positive(&[*channels])?;
                if input.first() != Some(channels) {
                    return Err(bad(format!("expects {channels} channels, got {input:?}")));
                }
                Ok(input.to_vec())
            }
            LayerSpec::GlobalAvgPool => {
                if input.len() < 2 {
                    return Err(bad(format!("needs channel and spatial axes, got {input:?}")));
                }
                Ok(vec![input[0]])
            }
            LayerSpec::Reshape { shape } => {
                if shape.iter().product::<usize>() != input.iter().product::<usize>() {
                    return Err(bad(format!("cannot reshape {input:?} to {shape:?}")));
                }
                Ok(shape.clone())
            }
            LayerSpec::NoiseInject { stddev } => {
                if !(*stddev >= 0.0) {
                    return Err(bad(format!("stddev must be non-negative, got {stddev}")));
                }
                Ok(input.to_vec())
            }
            LayerSpec::Resize2d { height, width } => {
                positive(&[*height, *width])?;
                expect_rank(3)?;
                Ok(vec![input[0], *height, *width])
            }
            LayerSpec::LeakyRelu { .. } | LayerSpec::Relu | LayerSpec::Tanh | LayerSpec::Sigmoid => Ok(input.to_vec()),
        }
    }
}
