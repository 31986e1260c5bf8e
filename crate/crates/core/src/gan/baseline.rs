use rand::seq::index;
use tsgan_autograd::Tensor;
use tsgan_nn::Mode;

use super::arch;
use super::config::TsganConfig;
use super::log::StepRecord;
use super::model::{gather, scope, uniforms, ClassData, CriticTally, Wgan, SAMPLE_CHUNK, SCOPE_BASELINE};
use crate::error::{Error, Result};
use crate::rng::{sample_latent, stream, Purpose};

/// Single-stage WGAN: noise straight to series, scored by a series critic.
/// With `lambda = 0` and a clip bound set, the critic is weight-clipped
/// instead of penalized.
#[derive(Clone, Debug)]
pub struct BaselineModel {
    pub config: TsganConfig,
    pub class: usize,
    pub signal_length: usize,
    pub series_scale: f32,
    pub wgan: Wgan,
    pub steps: u64,
}

impl BaselineModel {
    pub fn new(config: &TsganConfig, class: usize, signal_length: usize, series_scale: f32) -> Result<Self> {
        config.validate()?;
        let wgan = Wgan::new(
            arch::direct_series_generator(config, signal_length)?,
            arch::series_critic(config, signal_length)?,
            config,
            config.seed ^ scope(class, SCOPE_BASELINE).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        Ok(BaselineModel {
            config: config.clone(),
            class,
            signal_length,
            series_scale,
            wgan,
            steps: 0,
        })
    }

    pub fn next_step(&mut self, data: &ClassData, planned: u64) -> Result<Option<StepRecord>> {
        if self.steps >= planned {
            return Ok(None);
        }
        self.train_step(data).map(Some)
    }

    pub fn train_step(&mut self, data: &ClassData) -> Result<StepRecord> {
        let cfg = self.config.clone();
        let n = data.len();
        let m = cfg.batch_for(n);
        let sc = scope(self.class, SCOPE_BASELINE);
        let t = self.steps;
        let mut tally = CriticTally::default();
        for k in 0..cfg.n_critic as u64 {
            let pos = t * cfg.n_critic as u64 + k;
            let mut data_rng = stream(cfg.seed, sc, Purpose::CriticBatch, pos);
            let mut z_rng = stream(cfg.seed, sc, Purpose::CriticLatent, pos);
            let mut noise = stream(cfg.seed, sc, Purpose::CriticNoise, pos);
            let idx = index::sample(&mut data_rng, n, m).into_vec();
            let real = gather(&data.series, &idx);
            let u = uniforms(m, &mut data_rng);
            let z = sample_latent(m, cfg.z_dim, &mut z_rng);
            let fake = self.wgan.generator.forward(&z, Mode::Train(&mut noise))?.detach();
            tally.add(self.wgan.critic_update(&real, &fake, &u, &cfg, &mut noise)?);
        }
        let mut z_rng = stream(cfg.seed, sc, Purpose::GeneratorLatent, t);
        let mut noise = stream(cfg.seed, sc, Purpose::GeneratorNoise, t);
        let z = sample_latent(m, cfg.z_dim, &mut z_rng);
        let g_loss = self.wgan.generator_update(&z, &mut noise)?;
        self.steps += 1;
        let record = StepRecord {
            step: t,
            spectrogram: None,
            series: Some(tally.finish(g_loss)),
        };
        if !record.is_finite() {
            return Err(Error::NonFinite {
                what: format!("loss in {}", serde_json::to_string(&record).unwrap_or_default()),
                step: t,
            });
        }
        Ok(record)
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Vec<f32>>> {
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut rng = stream(seed, 0, Purpose::Sample, 0);
        let z = sample_latent(n, self.config.z_dim, &mut rng);
        let mut out = Vec::with_capacity(n);
        for start in (0..n).step_by(SAMPLE_CHUNK) {
            let zc: Tensor = z.slice(0, start, SAMPLE_CHUNK.min(n - start))?;
            let y = self.wgan.generator.forward_eval(&zc)?;
            for row in y.data().chunks(self.signal_length) {
                out.push(row.iter().map(|v| v * self.series_scale).collect());
            }
        }
        Ok(out)
    }
}
