use std::collections::BTreeMap;

use tsgan_autograd::{GradMap, Tensor};

use crate::error::{NnError, Result};
use crate::network::Network;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub alpha: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
}

impl AdamConfig {
    /// Settings for generators and critics.
    pub fn gan() -> Self {
        AdamConfig {
            alpha: 1e-4,
            beta1: 0.0,
            beta2: 0.9,
            eps: 1e-8,
        }
    }

    /// Settings for the evaluation classifier.
    pub fn classifier() -> Self {
        AdamConfig {
            alpha: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self::gan()
    }
}

/// First and second moment estimates for one parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub m: Vec<f32>,
    pub v: Vec<f32>,
}

/// Adam with bias correction. Moments are keyed by parameter name and
/// created lazily on the first gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    moments: BTreeMap<String, Moments>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        AdamState {
            config,
            step: 0,
            moments: BTreeMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> &BTreeMap<String, Moments> {
        &self.moments
    }

    pub(crate) fn from_parts(config: AdamConfig, step: u64, moments: BTreeMap<String, Moments>) -> Self {
        AdamState { config, step, moments }
    }

    /// One update of every parameter of `net` that has a gradient.
    pub fn step(&mut self, net: &mut Network, grads: &GradMap) -> Result<()> {
        self.update(net.named_params_mut(), grads)
    }

    /// One update over arbitrary named leaves. Parameters without a gradient
    /// keep their values; the step counter advances regardless.
    pub fn update<'a>(&mut self, params: impl IntoIterator<Item = (String, &'a mut Tensor)>, grads: &GradMap) -> Result<()> {
        self.step += 1;
        let AdamConfig { alpha, beta1, beta2, eps } = self.config;
        let (b1, b2) = (beta1 as f64, beta2 as f64);
        let t = self.step as i32;
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        for (name, param) in params {
            let Some(g) = grads.get(param) else { continue };
            if g.shape() != param.shape() {
                return Err(NnError::RecordShape {
                    name,
                    expected: param.shape().to_vec(),
                    found: g.shape().to_vec(),
                });
            }
            let n = param.numel();
            let state = self.moments.entry(name).or_insert_with(|| Moments {
                m: vec![0.0; n],
                v: vec![0.0; n],
            });
            let mut values = param.to_vec();
            for (((p, &gi), m), v) in values.iter_mut().zip(g.data()).zip(&mut state.m).zip(&mut state.v) {
                let gi = gi as f64;
                let m_new = b1 * *m as f64 + (1.0 - b1) * gi;
                let v_new = b2 * *v as f64 + (1.0 - b2) * gi * gi;
                *m = m_new as f32;
                *v = v_new as f32;
                let update = alpha as f64 * (m_new / c1) / ((v_new / c2).sqrt() + eps as f64);
                *p = (*p as f64 - update) as f32;
            }
            *param = Tensor::from_vec(param.shape(), values)?.requires_grad();
        }
        Ok(())
    }
}

/// Clamps every parameter entry of `net` into `[-c, c]`.
pub fn weight_clip(net: &mut Network, c: f32) {
    assert!(c > 0.0, "clip bound must be positive");
    for (_, param) in net.named_params_mut() {
        *param = clip_tensor(param, c).requires_grad();
    }
}

/// Entry-wise clamp to `[-c, c]`; the result is untracked.
pub fn clip_tensor(t: &Tensor, c: f32) -> Tensor {
    let data = t.data().iter().map(|v| v.clamp(-c, c)).collect();
    Tensor::from_vec(t.shape(), data).expect("same shape")
}
