use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gan::TsganConfig;
use crate::kv::KvFile;
use crate::signal::{dataset_name, load_dataset, toy_sine_square, SignalDataset};

/// Where the signals come from.
#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSpec {
    /// The generated sine/square set: `toy[:per_class[:length[:seed]]]`.
    Toy { per_class: usize, length: usize, seed: u64 },
    /// A UCR-style pair of files.
    Files { train: PathBuf, test: PathBuf },
}

pub const TOY_DEFAULT_PER_CLASS: usize = 60;
pub const TOY_DEFAULT_LENGTH: usize = 128;

impl DatasetSpec {
    /// Resolves `spec`: `toy...`, `TRAIN,TEST`, a `*_TRAIN.*` file (its
    /// `_TEST` sibling is implied) or a directory holding exactly one such
    /// pair.
    pub fn resolve(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "toy" || spec.starts_with("toy:") {
            return Self::parse_toy(spec);
        }
        if let Some((train, test)) = spec.split_once(',') {
            return Ok(DatasetSpec::Files {
                train: PathBuf::from(train.trim()),
                test: PathBuf::from(test.trim()),
            });
        }
        let path = Path::new(spec);
        if path.is_dir() {
            let mut trains: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(Error::io(path))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.contains("_TRAIN")))
                .collect();
            trains.sort();
            return match trains.as_slice() {
                [one] => Self::from_train_file(one),
                [] => Err(Error::Dataset(format!("{} holds no *_TRAIN file", path.display()))),
                _ => Err(Error::Dataset(format!("{} holds several *_TRAIN files; name one", path.display()))),
            };
        }
        Self::from_train_file(path)
    }

    fn parse_toy(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').skip(1).collect();
        if parts.len() > 3 {
            return Err(Error::config("dataset", format!("`{spec}`: expected toy[:per_class[:length[:seed]]]")));
        }
        let num = |i: usize, default: u64| -> Result<u64> {
            parts.get(i).map_or(Ok(default), |p| p.parse().map_err(|_| Error::config("dataset", format!("`{p}` in `{spec}` is not a number"))))
        };
        let per_class = num(0, TOY_DEFAULT_PER_CLASS as u64)? as usize;
        let length = num(1, TOY_DEFAULT_LENGTH as u64)? as usize;
        if per_class < 2 || length < 2 {
            return Err(Error::config("dataset", "toy sets need at least 2 series of 2 samples per class"));
        }
        Ok(DatasetSpec::Toy {
            per_class,
            length,
            seed: num(2, 0)?,
        })
    }

    fn from_train_file(train: &Path) -> Result<Self> {
        let name = train.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if !name.contains("_TRAIN") {
            return Err(Error::config("dataset", format!("{}: expected a *_TRAIN file, a directory, `TRAIN,TEST` or `toy`", train.display())));
        }
        let test = train.with_file_name(name.replacen("_TRAIN", "_TEST", 1));
        Ok(DatasetSpec::Files {
            train: train.to_path_buf(),
            test,
        })
    }

    pub fn name(&self) -> String {
        match self {
            DatasetSpec::Toy { .. } => "toy-sine-square".into(),
            DatasetSpec::Files { train, .. } => dataset_name(train),
        }
    }

    pub fn check_exists(&self) -> Result<()> {
        if let DatasetSpec::Files { train, test } = self {
            for p in [train, test] {
                if !p.is_file() {
                    return Err(Error::Missing(p.clone()));
                }
            }
        }
        Ok(())
    }

    /// Both splits at native length, unnormalized.
    pub fn load(&self) -> Result<SignalDataset> {
        match self {
            DatasetSpec::Toy { per_class, length, seed } => Ok(toy_sine_square(*per_class, *length, *seed)),
            DatasetSpec::Files { train, test } => load_dataset(train, test),
        }
    }
}

impl fmt::Display for DatasetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSpec::Toy { per_class, length, seed } => write!(f, "toy:{per_class}:{length}:{seed}"),
            DatasetSpec::Files { train, test } => write!(f, "{},{}", train.display(), test.display()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelChoice {
    Tsgan,
    Baseline,
    Both,
}

pub const TSGAN: &str = "tsgan";
pub const BASELINE: &str = "wgan-baseline";

impl ModelChoice {
    pub fn kinds(self) -> &'static [&'static str] {
        match self {
            ModelChoice::Tsgan => &[TSGAN],
            ModelChoice::Baseline => &[BASELINE],
            ModelChoice::Both => &[BASELINE, TSGAN],
        }
    }
}

impl FromStr for ModelChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            TSGAN => Ok(ModelChoice::Tsgan),
            BASELINE | "wgan" => Ok(ModelChoice::Baseline),
            "both" => Ok(ModelChoice::Both),
            _ => Err(format!("unknown model `{s}` (tsgan | wgan-baseline | both)")),
        }
    }
}

impl fmt::Display for ModelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelChoice::Tsgan => TSGAN,
            ModelChoice::Baseline => BASELINE,
            ModelChoice::Both => "both",
        })
    }
}

/// Everything one run needs. The GAN seed doubles as the run seed.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub model: ModelChoice,
    pub gan: TsganConfig,
    pub out: PathBuf,
    /// Classifier epochs for TSTR, TRTS, TRTR and the FID feature network.
    pub eval_epochs: usize,
    pub eval_batch_size: usize,
    /// Series generated per class; `None` generates as many as the class
    /// holds in both splits together.
    pub samples_per_class: Option<usize>,
    pub checkpoint_every: u64,
    pub dump_conditions: bool,
}

const EXPERIMENT_KEYS: &[&str] = &["dataset", "model", "out", "eval_epochs", "eval_batch_size", "samples_per_class", "checkpoint_every", "dump_conditions"];

impl ExperimentConfig {
    pub fn new(dataset: DatasetSpec) -> Self {
        ExperimentConfig {
            dataset,
            model: ModelChoice::Both,
            gan: TsganConfig::default(),
            out: PathBuf::from("runs"),
            eval_epochs: 200,
            eval_batch_size: 16,
            samples_per_class: None,
            checkpoint_every: 100,
            dump_conditions: false,
        }
    }

    pub fn seed(&self) -> u64 {
        self.gan.seed
    }

    /// Builds a config from `key = value` entries; `dataset` is required and
    /// unknown keys are rejected.
    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        if let Some(bad) = kv.keys().find(|k| !EXPERIMENT_KEYS.contains(k) && !TsganConfig::KEYS.contains(k)) {
            return Err(Error::config(bad, "unknown key"));
        }
        let spec: String = kv.require("dataset")?;
        let mut cfg = ExperimentConfig::new(DatasetSpec::resolve(&spec)?);
        cfg.gan.apply_kv(kv)?;
        if let Some(m) = kv.parsed("model")? {
            cfg.model = m;
        }
        if let Some(o) = kv.get("out") {
            cfg.out = PathBuf::from(o);
        }
        if let Some(v) = kv.parsed("eval_epochs")? {
            cfg.eval_epochs = v;
        }
        if let Some(v) = kv.parsed("eval_batch_size")? {
            cfg.eval_batch_size = v;
        }
        if let Some(v) = kv.get("samples_per_class") {
            cfg.samples_per_class = match v {
                "auto" => None,
                _ => Some(kv.require("samples_per_class")?),
            };
        }
        if let Some(v) = kv.parsed("checkpoint_every")? {
            cfg.checkpoint_every = v;
        }
        if let Some(v) = kv.parsed("dump_conditions")? {
            cfg.dump_conditions = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads an optional config file, then applies `overrides` in order.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut kv = match path {
            Some(p) => KvFile::load(p)?,
            None => KvFile::new(),
        };
        for (k, v) in overrides {
            kv.set(k, v);
        }
        Self::from_kv(&kv)
    }

    pub fn to_kv(&self) -> KvFile {
        let mut kv = KvFile::new();
        kv.set("dataset", &self.dataset);
        kv.set("model", self.model);
        kv.set("out", self.out.display());
        kv.set("eval_epochs", self.eval_epochs);
        kv.set("eval_batch_size", self.eval_batch_size);
        kv.set("samples_per_class", self.samples_per_class.map_or("auto".to_string(), |n| n.to_string()));
        kv.set("checkpoint_every", self.checkpoint_every);
        kv.set("dump_conditions", self.dump_conditions);
        self.gan.to_kv(&mut kv);
        kv
    }

    pub fn validate(&self) -> Result<()> {
        self.gan.validate()?;
        if self.eval_epochs == 0 {
            return Err(Error::config("eval_epochs", "must be positive"));
        }
        if self.eval_batch_size == 0 {
            return Err(Error::config("eval_batch_size", "must be positive"));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::config("checkpoint_every", "must be positive"));
        }
        self.dataset.check_exists()
    }

    /// `<out>/<dataset>-s<seed>`; models share the directory in their own
    /// subdirectories.
    pub fn run_dir(&self) -> PathBuf {
        self.out.join(format!("{}-s{}", self.dataset.name(), self.seed()))
    }

    /// SHA-256 over the configuration (minus the output location) and the
    /// input files, each file framed git-blob style as `blob <len>\0<bytes>`.
    pub fn input_hash(&self) -> Result<String> {
        let mut kv = self.to_kv();
        kv.set("out", "-");
        let mut h = Sha256::new();
        h.update(b"config\0");
        h.update(kv.render().as_bytes());
        if let DatasetSpec::Files { train, test } = &self.dataset {
            for p in [train, test] {
                let bytes = std::fs::read(p).map_err(Error::io(p))?;
                h.update(format!("blob {}\0", bytes.len()).as_bytes());
                h.update(&bytes);
            }
        }
        Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }
}
