//! Run orchestration: configuration, per-run directories and manifests, and
//! the train / generate / evaluate / plot / batch commands behind the CLI.
//!
//! A run directory `<out>/<dataset>-s<seed>` holds:
//!
//! ```text
//! config.txt                      effective configuration
//! manifest.json                   index of everything below
//! timings.json                    wall-clock seconds per command
//! <model>/class-<c>/*.tsg         networks and optimizer state
//! <model>/class-<c>/state.txt    step counters and model configuration
//! <model>/class-<c>/train_log.jsonl
//! <model>/samples/class-<c>.tsv  generated series
//! eval/metrics.jsonl              FID and accuracy records
//! eval/table.txt                  accuracy table row
//! plots/class-<c>.svg            three-row sample panels
//! ```

mod commands;
mod config;
mod manifest;
mod plot;

pub use commands::{cmd_batch, cmd_evaluate, cmd_generate, cmd_plot, cmd_run, cmd_train, render_batch, tally, BatchReport, DatasetSummary, Tally, CONFIG_FILE};
pub use config::{DatasetSpec, ExperimentConfig, ModelChoice, BASELINE, TOY_DEFAULT_LENGTH, TOY_DEFAULT_PER_CLASS, TSGAN};
pub use manifest::{record_timing, ClassRun, ModelRun, RunManifest, MANIFEST_FILE, TIMINGS_FILE};
pub use plot::{render_panel, PanelRow, PANEL_COLUMNS};
