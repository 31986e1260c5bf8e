use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::SizeCategory;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMINGS_FILE: &str = "timings.json";

/// Per-class training artifacts. Paths are relative to the run directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRun {
    pub class: usize,
    pub label: String,
    pub checkpoint: Vec<PathBuf>,
    pub log: PathBuf,
    pub planned_steps: u64,
    pub steps_done: u64,
    /// Why training stopped early, if it did.
    pub aborted: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelRun {
    pub kind: String,
    pub classes: Vec<ClassRun>,
    pub samples: Vec<PathBuf>,
}

/// Index of a run directory. Wall-clock times live in a separate file so
/// that the manifest itself is reproducible byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub dataset: String,
    pub seed: u64,
    pub input_hash: String,
    pub config: BTreeMap<String, String>,
    pub size_category: SizeCategory,
    pub signal_count: usize,
    pub signal_length: usize,
    pub working_length: usize,
    pub labels: Vec<String>,
    pub models: Vec<ModelRun>,
    pub metrics: Vec<PathBuf>,
    pub table: Option<PathBuf>,
    pub plots: Vec<PathBuf>,
    pub timings: PathBuf,
}

impl RunManifest {
    pub fn model(&self, kind: &str) -> Option<&ModelRun> {
        self.models.iter().find(|m| m.kind == kind)
    }

    pub fn model_mut(&mut self, kind: &str) -> Option<&mut ModelRun> {
        self.models.iter_mut().find(|m| m.kind == kind)
    }

    pub fn aborted(&self) -> bool {
        self.models.iter().flat_map(|m| &m.classes).any(|c| c.aborted.is_some())
    }

    /// Every file the manifest points at, relative to the run directory.
    pub fn listed_paths(&self) -> Vec<PathBuf> {
        let mut out = Vec::new();
        for m in &self.models {
            for c in &m.classes {
                out.extend(c.checkpoint.iter().cloned());
                out.push(c.log.clone());
            }
            out.extend(m.samples.iter().cloned());
        }
        out.extend(self.metrics.iter().cloned());
        out.extend(self.table.iter().cloned());
        out.extend(self.plots.iter().cloned());
        out.push(self.timings.clone());
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn save(&self, run_dir: &Path) -> Result<()> {
        let path = run_dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.to_json()).map_err(Error::io(path))
    }

    pub fn load(run_dir: &Path) -> Result<Self> {
        let path = run_dir.join(MANIFEST_FILE);
        if !path.is_file() {
            return Err(Error::Missing(path));
        }
        let text = std::fs::read_to_string(&path).map_err(Error::io(&path))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path,
            line: e.line(),
            msg: e.to_string(),
        })
    }
}

/// Records `seconds` under `key` in the run's timings file.
pub fn record_timing(run_dir: &Path, key: &str, seconds: f64) -> Result<()> {
    let path = run_dir.join(TIMINGS_FILE);
    let mut times: BTreeMap<String, f64> = match std::fs::read_to_string(&path) {
        Ok(text) => serde_json::from_str(&text).unwrap_or_default(),
        Err(_) => BTreeMap::new(),
    };
    times.insert(key.to_string(), seconds);
    let text = serde_json::to_string_pretty(&times).expect("timings serialize") + "\n";
    std::fs::write(&path, text).map_err(Error::io(path))
}
