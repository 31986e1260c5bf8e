use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tsgan::experiment::{cmd_batch, cmd_evaluate, cmd_generate, cmd_plot, cmd_run, cmd_train, render_batch, ExperimentConfig};

#[derive(Parser)]
#[command(name = "tsgan", version, about = "Train and evaluate spectrogram-conditioned GANs for univariate time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// toy[:per_class[:length[:seed]]], a *_TRAIN file, a directory, or TRAIN,TEST
    #[arg(long)]
    dataset: Option<String>,
    /// tsgan | wgan-baseline | both
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// GAN training epochs per class
    #[arg(long)]
    epochs: Option<usize>,
    /// Output root; runs go to <out>/<dataset>-s<seed>
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other configuration key, as key=value (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn overrides(&self) -> Result<Vec<(String, String)>, String> {
        let mut kv = Vec::new();
        for s in &self.set {
            let (k, v) = s.split_once('=').ok_or_else(|| format!("--set expects KEY=VALUE, got `{s}`"))?;
            kv.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                kv.push((k.to_string(), v));
            }
        };
        push("dataset", self.dataset.clone());
        push("model", self.model.clone());
        push("seed", self.seed.map(|s| s.to_string()));
        push("epochs", self.epochs.map(|e| e.to_string()));
        push("out", self.out.as_ref().map(|o| o.display().to_string()));
        Ok(kv)
    }

    fn load(&self) -> Result<ExperimentConfig, String> {
        ExperimentConfig::load(self.config.as_deref(), &self.overrides()?).map_err(|e| e.to_string())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train one model per class and checkpoint it
    Train {
        #[command(flatten)]
        common: Common,
        /// Continue from existing checkpoints
        #[arg(long)]
        resume: bool,
    },
    /// Write synthetic series for every trained model
    Generate {
        #[command(flatten)]
        common: Common,
        /// Series per class (default: the class size)
        #[arg(long, short = 'n')]
        count: Option<usize>,
    },
    /// Compute FID, TSTR, TRTS and TRTR
    Evaluate {
        #[command(flatten)]
        common: Common,
    },
    /// Draw the per-class sample panels
    Plot {
        #[command(flatten)]
        common: Common,
    },
    /// Train, generate, evaluate and plot
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        resume: bool,
    },
    /// Run several datasets (or collect finished runs) and compare models
    Batch {
        #[command(flatten)]
        common: Common,
        /// Dataset specs or run directories
        entries: Vec<String>,
        /// File with one dataset spec or run directory per line
        #[arg(long)]
        list: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), String> {
    let err = |e: tsgan::Error| e.to_string();
    match cli.command {
        Command::Train { common, resume } => {
            let m = cmd_train(&common.load()?, resume).map_err(err)?;
            for model in &m.models {
                for c in &model.classes {
                    match &c.aborted {
                        Some(why) => eprintln!("{} class {}: aborted after {} steps: {why}", model.kind, c.label, c.steps_done),
                        None => println!("{} class {}: {} steps", model.kind, c.label, c.steps_done),
                    }
                }
            }
        }
        Command::Generate { common, count } => {
            let m = cmd_generate(&common.load()?, count).map_err(err)?;
            m.models.iter().flat_map(|x| &x.samples).for_each(|p| println!("{}", p.display()));
        }
        Command::Evaluate { common } => {
            let cfg = common.load()?;
            let m = cmd_evaluate(&cfg).map_err(err)?;
            if let Some(t) = &m.table {
                let path = cfg.run_dir().join(t);
                print!("{}", std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?);
            }
        }
        Command::Plot { common } => {
            let m = cmd_plot(&common.load()?).map_err(err)?;
            m.plots.iter().for_each(|p| println!("{}", p.display()));
        }
        Command::Run { common, resume } => {
            let cfg = common.load()?;
            let m = cmd_run(&cfg, resume).map_err(err)?;
            println!("{}", cfg.run_dir().display());
            if m.aborted() {
                eprintln!("some classes stopped early on a non-finite loss; see manifest.json");
            }
        }
        Command::Batch { mut common, mut entries, list } => {
            if let Some(list) = list {
                let text = std::fs::read_to_string(&list).map_err(|e| format!("{}: {e}", list.display()))?;
                entries.extend(text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(String::from));
            }
            // The base configuration needs some dataset; each entry replaces it.
            if common.dataset.is_none() && common.config.is_none() {
                common.dataset = Some("toy".into());
            }
            let report = cmd_batch(&common.load()?, &entries).map_err(err)?;
            print!("{}", render_batch(&report));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
