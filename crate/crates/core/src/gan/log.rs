use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One stage's numbers for one step. Critic-side values are means over the
/// step's critic updates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub critic_loss: f32,
    pub wasserstein: f32,
    pub penalty: f32,
    pub grad_norm: Option<f32>,
    pub generator_loss: f32,
    pub critic_updates: u32,
    pub generator_updates: u32,
}

impl StageRecord {
    pub fn is_finite(&self) -> bool {
        self.critic_loss.is_finite()
            && self.wasserstein.is_finite()
            && self.penalty.is_finite()
            && self.grad_norm.is_none_or(f32::is_finite)
            && self.generator_loss.is_finite()
    }
}

/// A training step. `spectrogram` is stage 1 (G against D_x), `series` is
/// stage 2 (F against D_y) or the baseline's single stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub spectrogram: Option<StageRecord>,
    pub series: Option<StageRecord>,
}

impl StepRecord {
    pub fn is_finite(&self) -> bool {
        self.spectrogram.as_ref().is_none_or(StageRecord::is_finite) && self.series.as_ref().is_none_or(StageRecord::is_finite)
    }
}

/// Per-step records of one run; wall time is kept elsewhere so that logs
/// of identical runs compare equal.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<StepRecord>,
}

impl TrainLog {
    pub fn push(&mut self, record: StepRecord) {
        assert!(self.records.last().is_none_or(|r| r.step < record.step));
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.records.iter().all(StepRecord::is_finite)
    }

    /// Mean interpolate-gradient norm over the last `window` records that
    /// carry one, per stage: `(spectrogram, series)`.
    pub fn terminal_grad_norms(&self, window: usize) -> (Option<f32>, Option<f32>) {
        let mean = |pick: fn(&StepRecord) -> Option<f32>| {
            let vals: Vec<f32> = self.records.iter().rev().filter_map(pick).take(window).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f32>() / vals.len() as f32)
        };
        (
            mean(|r| r.spectrogram.as_ref().and_then(|s| s.grad_norm)),
            mean(|r| r.series.as_ref().and_then(|s| s.grad_norm)),
        )
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for r in &self.records {
            serde_json::to_writer(&mut out, r).expect("records serialize");
            out.push(b'\n');
        }
        let mut f = std::fs::File::create(path).map_err(Error::io(path))?;
        f.write_all(&out).map_err(Error::io(path))
    }

    pub fn load_jsonl(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(Error::io(path))?;
        let mut records = Vec::new();
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(Error::io(path))?;
            if line.trim().is_empty() {
                continue;
            }
            let r = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: e.to_string(),
            })?;
            records.push(r);
        }
        Ok(TrainLog { records })
    }
}
