//! A complete run through the experiment layer: train both models, sample,
//! evaluate and plot, writing the usual run directory.
//!
//! `cargo run --release --example experiment_run -- [out_dir]`

use std::path::PathBuf;

use tsgan::experiment::{cmd_run, DatasetSpec, ExperimentConfig};

fn main() {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("tsgan-example"), PathBuf::from);
    let mut cfg = ExperimentConfig::new(DatasetSpec::resolve("toy:20:64:0").unwrap());
    cfg.out = out;
    cfg.gan.width = 4;
    cfg.gan.steps = Some(100);
    cfg.gan.adam.alpha = 1e-3;
    cfg.eval_epochs = 60;

    let manifest = cmd_run(&cfg, false).unwrap();
    let run_dir = cfg.run_dir();
    println!("run directory {}", run_dir.display());
    for path in manifest.listed_paths().iter().filter(|p| !p.to_string_lossy().ends_with(".tsg")) {
        println!("  {}", path.display());
    }
    if let Some(table) = &manifest.table {
        println!("\n{}", std::fs::read_to_string(run_dir.join(table)).unwrap());
    }
}
