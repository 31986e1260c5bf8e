use rand::seq::index;
use rand::Rng;
use tsgan_autograd::{backward, Tensor};
use tsgan_nn::{weight_clip, AdamState, Network};

use super::arch;
use super::config::{Schedule, TsganConfig};
use super::log::{StageRecord, StepRecord};
use super::loss::{critic_objective, generator_objective};
use crate::error::{Error, Result};
use crate::rng::{sample_latent, stream, Purpose};
use crate::signal::{spectrogram_batch, StftConfig};

/// Scope ids keep the random streams of different stages and models apart.
pub(crate) const SCOPE_SPECTROGRAM: u64 = 1;
pub(crate) const SCOPE_SERIES: u64 = 2;
pub(crate) const SCOPE_BASELINE: u64 = 3;

pub(crate) fn scope(class: usize, stage: u64) -> u64 {
    ((class as u64) << 4) | stage
}

/// A generator, its critic and their optimizers.
#[derive(Clone, Debug)]
pub struct Wgan {
    pub generator: Network,
    pub critic: Network,
    pub generator_opt: AdamState,
    pub critic_opt: AdamState,
}

impl Wgan {
    pub(crate) fn new(mut generator: Network, mut critic: Network, cfg: &TsganConfig, init_seed: u64) -> Self {
        let mut rng = stream(init_seed, 0, Purpose::Init, 0);
        generator.init_parameters(rng.random());
        critic.init_parameters(rng.random());
        Wgan {
            generator,
            critic,
            generator_opt: AdamState::new(cfg.adam),
            critic_opt: AdamState::new(cfg.adam),
        }
    }

    pub(crate) fn critic_update(
        &mut self,
        real: &Tensor,
        fake: &Tensor,
        u: &[f32],
        cfg: &TsganConfig,
        rng: &mut dyn rand::RngCore,
    ) -> Result<(f32, f32, f32, Option<f32>)> {
        let out = critic_objective(&mut self.critic, real, fake, u, cfg.lambda, rng)?;
        let grads = {
            let params = self.critic.params();
            backward(&out.loss, &params)?
        };
        self.critic_opt.step(&mut self.critic, &grads)?;
        if cfg.lambda == 0.0 {
            if let Some(c) = cfg.clip {
                weight_clip(&mut self.critic, c);
            }
        }
        Ok((out.loss.item()?, out.wasserstein, out.penalty, out.grad_norm))
    }

    pub(crate) fn generator_update(&mut self, input: &Tensor, rng: &mut dyn rand::RngCore) -> Result<f32> {
        let loss = generator_objective(&mut self.critic, &mut self.generator, input, rng)?;
        let grads = {
            let params = self.generator.params();
            backward(&loss, &params)?
        };
        self.generator_opt.step(&mut self.generator, &grads)?;
        Ok(loss.item()?)
    }
}

/// Running means of the critic-side numbers over one step.
#[derive(Default)]
pub(crate) struct CriticTally {
    loss: f64,
    wasserstein: f64,
    penalty: f64,
    grad_norm: f64,
    has_norm: bool,
    count: u32,
}

impl CriticTally {
    pub(crate) fn add(&mut self, (loss, w, p, g): (f32, f32, f32, Option<f32>)) {
        self.loss += loss as f64;
        self.wasserstein += w as f64;
        self.penalty += p as f64;
        if let Some(g) = g {
            self.grad_norm += g as f64;
            self.has_norm = true;
        }
        self.count += 1;
    }

    pub(crate) fn finish(self, generator_loss: f32) -> StageRecord {
        let n = self.count.max(1) as f64;
        StageRecord {
            critic_loss: (self.loss / n) as f32,
            wasserstein: (self.wasserstein / n) as f32,
            penalty: (self.penalty / n) as f32,
            grad_norm: self.has_norm.then(|| (self.grad_norm / n) as f32),
            generator_loss,
            critic_updates: self.count,
            generator_updates: 1,
        }
    }
}

/// Rows `idx` of a batched tensor, as a constant.
pub(crate) fn gather(t: &Tensor, idx: &[usize]) -> Tensor {
    let per = t.numel() / t.shape()[0];
    let mut data = Vec::with_capacity(idx.len() * per);
    for &i in idx {
        data.extend_from_slice(&t.data()[i * per..(i + 1) * per]);
    }
    let mut shape = t.shape().to_vec();
    shape[0] = idx.len();
    Tensor::from_vec(&shape, data).expect("gathered shape")
}

pub(crate) fn uniforms(m: usize, rng: &mut impl Rng) -> Vec<f32> {
    (0..m).map(|_| rng.random::<f32>()).collect()
}

/// Training tensors for one class.
#[derive(Clone, Debug)]
pub struct ClassData {
    /// `[n, 1, len]`, divided by the model's series scale.
    pub series: Tensor,
    /// `[n, 3, H, W]` spectrograms of the unscaled series.
    pub spectrograms: Tensor,
}

impl ClassData {
    pub fn new(series: &[&[f32]], stft: &StftConfig, series_scale: f32) -> Result<Self> {
        let n = series.len();
        if n == 0 {
            return Err(Error::Dataset("class has no signals".into()));
        }
        let len = series[0].len();
        let spectrograms = spectrogram_batch(series, stft)?;
        let data = series.iter().flat_map(|s| s.iter().map(|v| v / series_scale)).collect();
        Ok(ClassData {
            series: Tensor::from_vec(&[n, 1, len], data)?,
            spectrograms,
        })
    }

    pub fn len(&self) -> usize {
        self.series.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Scale that maps a class's series into the generators' tanh range.
pub fn series_scale(series: &[&[f32]]) -> f32 {
    let peak = series.iter().flat_map(|s| s.iter()).fold(0.0f32, |a, v| a.max(v.abs()));
    // Headroom keeps the extremes away from tanh saturation.
    if peak > 0.0 { peak * 1.05 } else { 1.0 }
}

/// The two-stage model for one class: stage 1 maps noise to spectrograms
/// (G against D_x); stage 2 maps spectrograms to series (F against D_y).
#[derive(Clone, Debug)]
pub struct TsganModel {
    pub config: TsganConfig,
    pub class: usize,
    pub image_shape: [usize; 3],
    pub signal_length: usize,
    pub series_scale: f32,
    pub stage1: Wgan,
    pub stage2: Wgan,
    pub stage1_steps: u64,
    pub stage2_steps: u64,
}

impl TsganModel {
    pub fn new(config: &TsganConfig, class: usize, signal_length: usize, series_scale: f32) -> Result<Self> {
        config.validate()?;
        let image_shape = config
            .stft
            .image_shape(signal_length)
            .ok_or_else(|| Error::config("stft_window", format!("longer than the {signal_length}-sample series")))?;
        let stage1 = Wgan::new(
            arch::spectrogram_generator(config, image_shape)?,
            arch::spectrogram_critic(config, image_shape)?,
            config,
            config.seed ^ scope(class, SCOPE_SPECTROGRAM).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        let stage2 = Wgan::new(
            arch::series_generator(config, image_shape, signal_length)?,
            arch::series_critic(config, signal_length)?,
            config,
            config.seed ^ scope(class, SCOPE_SERIES).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        Ok(TsganModel {
            config: config.clone(),
            class,
            image_shape,
            signal_length,
            series_scale,
            stage1,
            stage2,
            stage1_steps: 0,
            stage2_steps: 0,
        })
    }

    pub fn g(&self) -> &Network {
        &self.stage1.generator
    }

    pub fn f(&self) -> &Network {
        &self.stage2.generator
    }

    pub fn d_x(&self) -> &Network {
        &self.stage1.critic
    }

    pub fn d_y(&self) -> &Network {
        &self.stage2.critic
    }

    /// Records produced so far (one per step).
    pub fn steps_done(&self) -> u64 {
        match self.config.schedule {
            Schedule::Interleaved => self.stage2_steps,
            Schedule::Sequential => self.stage1_steps + self.stage2_steps,
        }
    }

    /// Whether `planned` generator steps per stage are complete.
    pub fn finished(&self, planned: u64) -> bool {
        self.stage1_steps >= planned && self.stage2_steps >= planned
    }

    /// The next step of the schedule, or `None` once `planned` generator
    /// steps per stage are done.
    pub fn next_step(&mut self, data: &ClassData, planned: u64) -> Result<Option<StepRecord>> {
        if self.finished(planned) {
            return Ok(None);
        }
        let (run1, run2) = match self.config.schedule {
            Schedule::Interleaved => (true, true),
            Schedule::Sequential => (self.stage1_steps < planned, self.stage1_steps >= planned),
        };
        self.train_step(data, run1, run2).map(Some)
    }

    /// One step: `n_critic` critic updates and one generator update for each
    /// selected stage. Fails when any logged quantity is not finite.
    pub fn train_step(&mut self, data: &ClassData, stage1: bool, stage2: bool) -> Result<StepRecord> {
        let step = self.steps_done();
        let spectrogram = if stage1 { Some(self.stage1_step(data)?) } else { None };
        let series = if stage2 { Some(self.stage2_step(data)?) } else { None };
        let record = StepRecord { step, spectrogram, series };
        if !record.is_finite() {
            return Err(Error::NonFinite {
                what: format!("loss in {}", serde_json::to_string(&record).unwrap_or_default()),
                step,
            });
        }
        Ok(record)
    }

    fn stage1_step(&mut self, data: &ClassData) -> Result<StageRecord> {
        let cfg = self.config.clone();
        let n = data.len();
        let m = cfg.batch_for(n);
        let sc = scope(self.class, SCOPE_SPECTROGRAM);
        let t = self.stage1_steps;
        let mut tally = CriticTally::default();
        for k in 0..cfg.n_critic as u64 {
            let pos = t * cfg.n_critic as u64 + k;
            let mut data_rng = stream(cfg.seed, sc, Purpose::CriticBatch, pos);
            let mut z_rng = stream(cfg.seed, sc, Purpose::CriticLatent, pos);
            let mut noise = stream(cfg.seed, sc, Purpose::CriticNoise, pos);
            let idx = index::sample(&mut data_rng, n, m).into_vec();
            let real = gather(&data.spectrograms, &idx);
            let u = uniforms(m, &mut data_rng);
            let z = sample_latent(m, cfg.z_dim, &mut z_rng);
            let fake = self.stage1.generator.forward(&z, tsgan_nn::Mode::Train(&mut noise))?.detach();
            tally.add(self.stage1.critic_update(&real, &fake, &u, &cfg, &mut noise)?);
        }
        let mut z_rng = stream(cfg.seed, sc, Purpose::GeneratorLatent, t);
        let mut noise = stream(cfg.seed, sc, Purpose::GeneratorNoise, t);
        let z = sample_latent(m, cfg.z_dim, &mut z_rng);
        let g_loss = self.stage1.generator_update(&z, &mut noise)?;
        self.stage1_steps += 1;
        Ok(tally.finish(g_loss))
    }

    /// A batch of F's conditions: a share of fresh `G(z)` (inference mode)
    /// and the rest spectrograms of randomly drawn real series.
    fn conditions(&self, data: &ClassData, m: usize, data_rng: &mut impl Rng, z_rng: &mut rand_chacha::ChaCha8Rng) -> Result<Tensor> {
        let synthetic = ((m as f32 * self.config.synthetic_condition_fraction).round() as usize).min(m);
        let real = m - synthetic;
        let mut parts = Vec::new();
        if synthetic > 0 {
            let z = sample_latent(synthetic, self.config.z_dim, z_rng);
            parts.push(self.stage1.generator.forward_eval(&z)?.detach());
        }
        if real > 0 {
            let n = data.len();
            let idx: Vec<usize> = (0..real).map(|_| data_rng.random_range(0..n)).collect();
            parts.push(gather(&data.spectrograms, &idx));
        }
        Ok(Tensor::concat(&parts, 0)?)
    }

    fn stage2_step(&mut self, data: &ClassData) -> Result<StageRecord> {
        let cfg = self.config.clone();
        let n = data.len();
        let m = cfg.batch_for(n);
        let sc = scope(self.class, SCOPE_SERIES);
        let t = self.stage2_steps;
        let mut tally = CriticTally::default();
        for k in 0..cfg.n_critic as u64 {
            let pos = t * cfg.n_critic as u64 + k;
            let mut data_rng = stream(cfg.seed, sc, Purpose::CriticBatch, pos);
            let mut z_rng = stream(cfg.seed, sc, Purpose::CriticLatent, pos);
            let mut noise = stream(cfg.seed, sc, Purpose::CriticNoise, pos);
            let idx = index::sample(&mut data_rng, n, m).into_vec();
            let real = gather(&data.series, &idx);
            let u = uniforms(m, &mut data_rng);
            let cond = self.conditions(data, m, &mut data_rng, &mut z_rng)?;
            let fake = self.stage2.generator.forward(&cond, tsgan_nn::Mode::Train(&mut noise))?.detach();
            tally.add(self.stage2.critic_update(&real, &fake, &u, &cfg, &mut noise)?);
        }
        let mut data_rng = stream(cfg.seed, sc, Purpose::Condition, t);
        let mut z_rng = stream(cfg.seed, sc, Purpose::GeneratorLatent, t);
        let mut noise = stream(cfg.seed, sc, Purpose::GeneratorNoise, t);
        let cond = self.conditions(data, m, &mut data_rng, &mut z_rng)?;
        let f_loss = self.stage2.generator_update(&cond, &mut noise)?;
        self.stage2_steps += 1;
        Ok(tally.finish(f_loss))
    }

    /// `n` synthetic spectrograms `G(z)` and series `F(G(z))`, inference
    /// mode except for F's latent noise, rescaled to the data's amplitude.
    /// Draws depend only on `seed`.
    pub fn sample_with_conditions(&self, n: usize, seed: u64) -> Result<(Vec<Vec<f32>>, Option<Tensor>)> {
        if n == 0 {
            return Ok((Vec::new(), None));
        }
        let mut rng = stream(seed, 0, Purpose::Sample, 0);
        let z = sample_latent(n, self.config.z_dim, &mut rng);
        let mut series = Vec::with_capacity(n);
        let mut specs = Vec::new();
        for start in (0..n).step_by(SAMPLE_CHUNK) {
            let len = SAMPLE_CHUNK.min(n - start);
            let zc = z.slice(0, start, len)?;
            let cond = self.g().forward_eval(&zc)?;
            let out = self.f().forward_sample(&cond, &mut rng)?;
            for row in out.data().chunks(self.signal_length) {
                series.push(row.iter().map(|v| v * self.series_scale).collect());
            }
            specs.push(cond);
        }
        Ok((series, Some(Tensor::concat(&specs, 0)?)))
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Vec<f32>>> {
        Ok(self.sample_with_conditions(n, seed)?.0)
    }
}

pub(crate) const SAMPLE_CHUNK: usize = 64;

/// `n` series of the model's signal length; see [`TsganModel::sample`].
pub fn sample_synthetic(model: &TsganModel, n: usize, seed: u64) -> Result<Vec<Vec<f32>>> {
    model.sample(n, seed)
}
