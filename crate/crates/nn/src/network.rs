use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use tsgan_autograd::{Tensor, TensorError};

use crate::error::{NnError, Result};
use crate::layer::{LayerSpec, BATCH_NORM_EPS, BATCH_NORM_MOMENTUM};

/// Standard deviation of the centered normal used for weights.
pub const INIT_STDDEV: f32 = 0.02;

/// Whether a forward pass trains (noise on, batch statistics) or infers.
pub enum Mode<'a> {
    Train(&'a mut dyn RngCore),
    Eval,
}

/// Running batch-norm statistics, one entry per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct RunningStats {
    pub mean: Vec<f32>,
    pub var: Vec<f32>,
}

#[derive(Clone, Debug)]
struct Layer {
    spec: LayerSpec,
    out_shape: Vec<usize>,
    params: Vec<Tensor>,
    running: Option<RunningStats>,
}

/// A feed-forward stack of layers with named parameters.
///
/// Parameter names are `"<layer index>.<role>"`, e.g. `"0.weight"` or
/// `"3.gamma"`; batch-norm buffers are `"<index>.running_mean"` and
/// `"<index>.running_var"`.
#[derive(Clone, Debug)]
pub struct Network {
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
}

impl Network {
    /// Validates the layer chain and allocates parameters (zero weights,
    /// unit batch-norm scale). Call [`Network::init_parameters`] before use.
    pub fn new(input_shape: &[usize], specs: Vec<LayerSpec>) -> Result<Self> {
        let mut shape = input_shape.to_vec();
        let mut layers = Vec::with_capacity(specs.len());
        for (index, spec) in specs.into_iter().enumerate() {
            let out_shape = spec.output_shape(index, &shape)?;
            let params = spec
                .param_shapes()
                .into_iter()
                .map(|(role, s)| {
                    let fill = if role == "gamma" { 1.0 } else { 0.0 };
                    Tensor::full(&s, fill).requires_grad()
                })
                .collect();
            let running = match spec {
                LayerSpec::BatchNorm { channels } => Some(RunningStats {
                    mean: vec![0.0; channels],
                    var: vec![1.0; channels],
                }),
                _ => None,
            };
            layers.push(Layer {
                spec,
                out_shape: out_shape.clone(),
                params,
                running,
            });
            shape = out_shape;
        }
        Ok(Network {
            input_shape: input_shape.to_vec(),
            layers,
        })
    }

    /// Deterministic initialization: weights from N(0, 0.02²), biases and
    /// batch-norm shifts zero, batch-norm scales one.
    pub fn init_parameters(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0f32, INIT_STDDEV).expect("valid stddev");
        for layer in &mut self.layers {
            let roles = layer.spec.param_shapes();
            for (param, (role, shape)) in layer.params.iter_mut().zip(roles) {
                let n: usize = shape.iter().product();
                let data = match role {
                    "weight" => (0..n).map(|_| normal.sample(&mut rng)).collect(),
                    "gamma" => vec![1.0; n],
                    _ => vec![0.0; n],
                };
                *param = Tensor::from_vec(&shape, data).expect("shape from spec").requires_grad();
            }
            if let Some(stats) = layer.running.as_mut() {
                stats.mean.fill(0.0);
                stats.var.fill(1.0);
            }
        }
    }

    pub fn initialized(mut self, seed: u64) -> Self {
        self.init_parameters(seed);
        self
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        self.layers.last().map_or(&self.input_shape, |l| &l.out_shape)
    }

    /// Per-sample output shape after each layer.
    pub fn layer_shapes(&self) -> impl Iterator<Item = &[usize]> {
        self.layers.iter().map(|l| l.out_shape.as_slice())
    }

    pub fn specs(&self) -> impl Iterator<Item = &LayerSpec> {
        self.layers.iter().map(|l| &l.spec)
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| l.params.iter()).collect()
    }

    pub fn named_params(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            for ((role, _), p) in layer.spec.param_shapes().into_iter().zip(&layer.params) {
                out.push((format!("{i}.{role}"), p));
            }
        }
        out
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            for ((role, _), p) in layer.spec.param_shapes().into_iter().zip(layer.params.iter_mut()) {
                out.push((format!("{i}.{role}"), p));
            }
        }
        out
    }

    pub fn param(&self, name: &str) -> Option<&Tensor> {
        self.named_params().into_iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }

    /// Replaces a parameter's values, keeping it a gradient leaf.
    pub fn set_param(&mut self, name: &str, data: Vec<f32>) -> Result<()> {
        let (_, slot) = self
            .named_params_mut()
            .into_iter()
            .find(|(n, _)| n == name)
            .ok_or_else(|| NnError::MissingRecord(name.to_string()))?;
        let found = vec![data.len()];
        if data.len() != slot.numel() {
            return Err(NnError::RecordShape {
                name: name.to_string(),
                expected: slot.shape().to_vec(),
                found,
            });
        }
        *slot = Tensor::from_vec(slot.shape(), data)?.requires_grad();
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.numel()).sum()
    }

    /// Non-trainable state (batch-norm running statistics) by name.
    pub fn named_buffers(&self) -> Vec<(String, &[f32])> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            if let Some(stats) = &layer.running {
                out.push((format!("{i}.running_mean"), stats.mean.as_slice()));
                out.push((format!("{i}.running_var"), stats.var.as_slice()));
            }
        }
        out
    }

    pub fn set_buffer(&mut self, name: &str, data: Vec<f32>) -> Result<()> {
        let (index, which) = name
            .split_once('.')
            .and_then(|(i, w)| Some((i.parse::<usize>().ok()?, w)))
            .ok_or_else(|| NnError::MissingRecord(name.to_string()))?;
        let stats = self
            .layers
            .get_mut(index)
            .and_then(|l| l.running.as_mut())
            .ok_or_else(|| NnError::MissingRecord(name.to_string()))?;
        let slot = match which {
            "running_mean" => &mut stats.mean,
            "running_var" => &mut stats.var,
            _ => return Err(NnError::MissingRecord(name.to_string())),
        };
        if slot.len() != data.len() {
            return Err(NnError::RecordShape {
                name: name.to_string(),
                expected: vec![slot.len()],
                found: vec![data.len()],
            });
        }
        *slot = data;
        Ok(())
    }

    pub fn running_stats(&self, layer: usize) -> Option<&RunningStats> {
        self.layers.get(layer).and_then(|l| l.running.as_ref())
    }

    /// Forward pass over a batch `[n, ...input_shape]`.
    ///
    /// In [`Mode::Train`] noise layers draw from the given generator and
    /// batch norm uses (and updates running estimates from) batch statistics.
    pub fn forward(&mut self, x: &Tensor, mode: Mode<'_>) -> Result<Tensor> {
        match mode {
            Mode::Eval => self.forward_eval(x),
            Mode::Train(rng) => {
                let (out, stats) = self.run(x, self.layers.len(), Some(rng), true)?;
                for (index, batch) in stats {
                    let running = self.layers[index].running.as_mut().expect("batch-norm layer");
                    for (r, b) in running.mean.iter_mut().zip(&batch.mean) {
                        *r = (1.0 - BATCH_NORM_MOMENTUM) * *r + BATCH_NORM_MOMENTUM * b;
                    }
                    for (r, b) in running.var.iter_mut().zip(&batch.var) {
                        *r = (1.0 - BATCH_NORM_MOMENTUM) * *r + BATCH_NORM_MOMENTUM * b;
                    }
                }
                Ok(out)
            }
        }
    }

    /// Inference-mode forward pass; a pure function of the input.
    pub fn forward_eval(&self, x: &Tensor) -> Result<Tensor> {
        Ok(self.run(x, self.layers.len(), None, false)?.0)
    }

    /// Inference-mode forward pass that still draws noise layers from `rng`,
    /// for generators whose noise acts as a latent input.
    pub fn forward_sample(&self, x: &Tensor, rng: &mut dyn RngCore) -> Result<Tensor> {
        Ok(self.run(x, self.layers.len(), Some(rng), false)?.0)
    }

    /// Inference-mode output after the first `depth` layers.
    pub fn forward_eval_until(&self, x: &Tensor, depth: usize) -> Result<Tensor> {
        Ok(self.run(x, depth.min(self.layers.len()), None, false)?.0)
    }

    fn run(&self, x: &Tensor, depth: usize, mut rng: Option<&mut dyn RngCore>, training: bool) -> Result<(Tensor, Vec<(usize, RunningStats)>)> {
        if x.rank() != self.input_shape.len() + 1 || x.shape()[1..] != self.input_shape[..] {
            return Err(NnError::InputShape {
                expected: self.input_shape.clone(),
                got: x.shape().to_vec(),
            });
        }
        let n = x.shape()[0];
        let mut h = x.clone();
        let mut batch_stats = Vec::new();
        for (index, layer) in self.layers.iter().take(depth).enumerate() {
            let wrap = |source: TensorError| NnError::Layer {
                index,
                kind: layer.spec.kind(),
                source,
            };
            h = match &layer.spec {
                LayerSpec::Dense { .. } => h.matmul(&layer.params[0]).and_then(|y| y.add(&layer.params[1])).map_err(wrap)?,
                LayerSpec::Conv1d { out_channels, .. } => {
                    let geom = layer.spec.geom().expect("conv geometry");
                    let bias = layer.params[1].reshape(&[1, *out_channels, 1]).map_err(wrap)?;
                    h.conv1d(&layer.params[0], geom).and_then(|y| y.add(&bias)).map_err(wrap)?
                }
                LayerSpec::Conv2d { out_channels, .. } => {
                    let geom = layer.spec.geom().expect("conv geometry");
                    let bias = layer.params[1].reshape(&[1, *out_channels, 1, 1]).map_err(wrap)?;
                    h.conv2d(&layer.params[0], geom).and_then(|y| y.add(&bias)).map_err(wrap)?
                }
                LayerSpec::ConvTranspose1d { out_channels, .. } => {
                    let geom = layer.spec.geom().expect("conv geometry");
                    let bias = layer.params[1].reshape(&[1, *out_channels, 1]).map_err(wrap)?;
                    h.conv_transpose1d(&layer.params[0], geom, layer.out_shape[1])
                        .and_then(|y| y.add(&bias))
                        .map_err(wrap)?
                }
                LayerSpec::ConvTranspose2d { out_channels, .. } => {
                    let geom = layer.spec.geom().expect("conv geometry");
                    let bias = layer.params[1].reshape(&[1, *out_channels, 1, 1]).map_err(wrap)?;
                    let hw = [layer.out_shape[1], layer.out_shape[2]];
                    h.conv_transpose2d(&layer.params[0], geom, hw)
                        .and_then(|y| y.add(&bias))
                        .map_err(wrap)?
                }
                LayerSpec::LeakyRelu { slope } => h.leaky_relu(*slope),
                LayerSpec::Relu => h.relu(),
                LayerSpec::Tanh => h.tanh(),
                LayerSpec::Sigmoid => h.sigmoid(),
                LayerSpec::BatchNorm { channels } => {
                    let (y, stats) = batch_norm(&h, *channels, &layer.params, layer.running.as_ref(), training).map_err(wrap)?;
                    if let Some(stats) = stats {
                        batch_stats.push((index, stats));
                    }
                    y
                }
                LayerSpec::GlobalAvgPool => {
                    let axes: Vec<usize> = (2..h.rank()).collect();
                    h.mean_axes(&axes, false).map_err(wrap)?
                }
                LayerSpec::Reshape { shape } => {
                    let mut full = vec![n];
                    full.extend_from_slice(shape);
                    h.reshape(&full).map_err(wrap)?
                }
                LayerSpec::NoiseInject { stddev } => match rng.as_deref_mut() {
                    Some(rng) if *stddev > 0.0 => {
                        let noise: Vec<f32> = (0..h.numel())
                            .map(|_| {
                                let z: f32 = StandardNormal.sample(rng);
                                z * stddev
                            })
                            .collect();
                        h.add(&Tensor::from_vec(h.shape(), noise)?).map_err(wrap)?
                    }
                    _ => h,
                },
                LayerSpec::Resize2d { height, width } => h.resize_bilinear(*height, *width).map_err(wrap)?,
            };
        }
        Ok((h, batch_stats))
    }
}

/// Per-channel normalization over the batch and spatial axes.
fn batch_norm(
    x: &Tensor,
    channels: usize,
    params: &[Tensor],
    running: Option<&RunningStats>,
    training: bool,
) -> std::result::Result<(Tensor, Option<RunningStats>), TensorError> {
    let mut keep = vec![1; x.rank()];
    keep[1] = channels;
    let axes: Vec<usize> = (0..x.rank()).filter(|&a| a != 1).collect();
    let gamma = params[0].reshape(&keep)?;
    let beta = params[1].reshape(&keep)?;
    if training {
        let count = x.numel() / channels;
        let mean = x.mean_axes(&axes, true)?;
        let centered = x.sub(&mean)?;
        let var = centered.square().mean_axes(&axes, true)?;
        let y = centered.div(&var.offset(BATCH_NORM_EPS).sqrt())?.mul(&gamma)?.add(&beta)?;
        let unbiased = if count > 1 { count as f32 / (count - 1) as f32 } else { 1.0 };
        let stats = RunningStats {
            mean: mean.to_vec(),
            var: var.data().iter().map(|v| v * unbiased).collect(),
        };
        Ok((y, Some(stats)))
    } else {
        let stats = running.expect("batch-norm layers own running statistics");
        let mean = Tensor::from_vec(&keep, stats.mean.clone())?;
        let inv_std: Vec<f32> = stats.var.iter().map(|v| 1.0 / (v + BATCH_NORM_EPS).sqrt()).collect();
        let inv_std = Tensor::from_vec(&keep, inv_std)?;
        let y = x.sub(&mean)?.mul(&inv_std)?.mul(&gamma)?.add(&beta)?;
        Ok((y, None))
    }
}
