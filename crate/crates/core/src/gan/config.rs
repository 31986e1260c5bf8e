use tsgan_nn::AdamConfig;

use crate::error::{Error, Result};
use crate::kv::KvFile;
use crate::signal::{StftConfig, WindowKind};

/// How the two stages share a training step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    /// Each step updates stage 1, then stage 2 conditioned on the current G.
    Interleaved,
    /// All stage-1 steps first, then all stage-2 steps against the final G.
    Sequential,
}

impl std::str::FromStr for Schedule {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "interleaved" => Ok(Schedule::Interleaved),
            "sequential" => Ok(Schedule::Sequential),
            _ => Err(format!("unknown schedule `{s}` (interleaved | sequential)")),
        }
    }
}

impl std::fmt::Display for Schedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Schedule::Interleaved => "interleaved",
            Schedule::Sequential => "sequential",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TsganConfig {
    pub z_dim: usize,
    /// Gradient-penalty weight.
    pub lambda: f32,
    /// Critic updates per generator update.
    pub n_critic: usize,
    /// Upper bound on the batch; the effective batch is `min(batch_size, class size)`.
    pub batch_size: usize,
    /// Passes over a class's signals; ignored when `steps` is set.
    pub epochs: usize,
    pub steps: Option<u64>,
    pub noise_stddev: f32,
    /// Noise on F's bottleneck. Magnitude spectrograms drop phase, so this
    /// is F's only source of variation beyond its condition; it stays on
    /// when sampling.
    pub latent_noise_stddev: f32,
    pub leaky_slope: f32,
    pub seed: u64,
    pub stft: StftConfig,
    /// Base channel count; networks use `width`, `2·width` and `4·width`.
    pub width: usize,
    /// Dense bottleneck between the image encoder and series decoder of F.
    pub bottleneck: usize,
    /// Share of F's training conditions that are fresh G(z) outputs; the
    /// rest are spectrograms of real series. 1.0 conditions only on G(z).
    pub synthetic_condition_fraction: f32,
    pub schedule: Schedule,
    pub adam: AdamConfig,
    /// Weight-clipping bound for the baseline critic when `lambda` is 0.
    pub clip: Option<f32>,
}

impl Default for TsganConfig {
    fn default() -> Self {
        TsganConfig {
            z_dim: 100,
            lambda: 10.0,
            n_critic: 5,
            batch_size: 32,
            epochs: 2000,
            steps: None,
            noise_stddev: 0.05,
            latent_noise_stddev: 1.0,
            leaky_slope: 0.2,
            seed: 0,
            stft: StftConfig::default(),
            width: 32,
            bottleneck: 64,
            synthetic_condition_fraction: 0.5,
            schedule: Schedule::Interleaved,
            adam: AdamConfig::gan(),
            clip: None,
        }
    }
}

impl TsganConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("z_dim", self.z_dim),
            ("n_critic", self.n_critic),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
            ("width", self.width),
            ("bottleneck", self.bottleneck),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::config(key, "must be positive"));
            }
        }
        if self.steps == Some(0) {
            return Err(Error::config("steps", "must be positive"));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::config("lambda", "must be non-negative"));
        }
        if !(self.noise_stddev >= 0.0) {
            return Err(Error::config("noise_stddev", "must be non-negative"));
        }
        if !(self.latent_noise_stddev >= 0.0) {
            return Err(Error::config("latent_noise_stddev", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.synthetic_condition_fraction) {
            return Err(Error::config("synthetic_condition_fraction", "must lie in [0, 1]"));
        }
        if let Some(c) = self.clip {
            if !(c > 0.0) {
                return Err(Error::config("clip", "must be positive"));
            }
        }
        if !(self.adam.alpha > 0.0) {
            return Err(Error::config("adam_alpha", "must be positive"));
        }
        self.stft.validate()
    }

    pub fn batch_for(&self, class_size: usize) -> usize {
        self.batch_size.min(class_size).max(1)
    }

    /// Generator steps per stage for a class of `class_size` signals.
    pub fn planned_steps(&self, class_size: usize) -> u64 {
        self.steps
            .unwrap_or_else(|| self.epochs as u64 * class_size.div_ceil(self.batch_for(class_size)) as u64)
    }

    /// Every field as `key = value` lines.
    pub fn to_kv(&self, kv: &mut KvFile) {
        kv.set("z_dim", self.z_dim);
        kv.set("lambda", self.lambda);
        kv.set("n_critic", self.n_critic);
        kv.set("batch_size", self.batch_size);
        kv.set("epochs", self.epochs);
        kv.set("steps", self.steps.map_or("auto".to_string(), |s| s.to_string()));
        kv.set("noise_stddev", self.noise_stddev);
        kv.set("latent_noise_stddev", self.latent_noise_stddev);
        kv.set("leaky_slope", self.leaky_slope);
        kv.set("seed", self.seed);
        kv.set("stft_window", self.stft.window_length);
        kv.set("stft_hop", self.stft.hop);
        kv.set("stft_fft", self.stft.fft_size);
        kv.set("stft_floor_db", self.stft.log_floor_db);
        kv.set("width", self.width);
        kv.set("bottleneck", self.bottleneck);
        kv.set("synthetic_condition_fraction", self.synthetic_condition_fraction);
        kv.set("schedule", self.schedule);
        kv.set("adam_alpha", self.adam.alpha);
        kv.set("adam_beta1", self.adam.beta1);
        kv.set("adam_beta2", self.adam.beta2);
        kv.set("adam_eps", self.adam.eps);
        kv.set("clip", self.clip.map_or("none".to_string(), |c| c.to_string()));
    }

    /// Overrides fields named in `kv`; unknown keys are left to the caller.
    pub fn apply_kv(&mut self, kv: &KvFile) -> Result<()> {
        macro_rules! take {
            ($key:literal, $field:expr) => {
                if let Some(v) = kv.parsed($key)? {
                    $field = v;
                }
            };
        }
        take!("z_dim", self.z_dim);
        take!("lambda", self.lambda);
        take!("n_critic", self.n_critic);
        take!("batch_size", self.batch_size);
        take!("epochs", self.epochs);
        if let Some(v) = kv.get("steps") {
            self.steps = match v {
                "auto" => None,
                _ => Some(kv.require("steps")?),
            };
        }
        take!("noise_stddev", self.noise_stddev);
        take!("latent_noise_stddev", self.latent_noise_stddev);
        take!("leaky_slope", self.leaky_slope);
        take!("seed", self.seed);
        take!("stft_window", self.stft.window_length);
        take!("stft_hop", self.stft.hop);
        take!("stft_fft", self.stft.fft_size);
        take!("stft_floor_db", self.stft.log_floor_db);
        take!("width", self.width);
        take!("bottleneck", self.bottleneck);
        take!("synthetic_condition_fraction", self.synthetic_condition_fraction);
        take!("schedule", self.schedule);
        take!("adam_alpha", self.adam.alpha);
        take!("adam_beta1", self.adam.beta1);
        take!("adam_beta2", self.adam.beta2);
        take!("adam_eps", self.adam.eps);
        if let Some(v) = kv.get("clip") {
            self.clip = match v {
                "none" => None,
                _ => Some(kv.require("clip")?),
            };
        }
        self.stft.window = WindowKind::Hann;
        Ok(())
    }

    pub const KEYS: &'static [&'static str] = &[
        "z_dim",
        "lambda",
        "n_critic",
        "batch_size",
        "epochs",
        "steps",
        "noise_stddev",
        "latent_noise_stddev",
        "leaky_slope",
        "seed",
        "stft_window",
        "stft_hop",
        "stft_fft",
        "stft_floor_db",
        "width",
        "bottleneck",
        "synthetic_condition_fraction",
        "schedule",
        "adam_alpha",
        "adam_beta1",
        "adam_beta2",
        "adam_eps",
        "clip",
    ];
}
