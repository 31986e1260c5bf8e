use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tsgan_nn::checkpoint::{save_records, Record};

use super::config::{DatasetSpec, ExperimentConfig, ModelChoice, BASELINE, TSGAN};
use super::manifest::{record_timing, ClassRun, ModelRun, RunManifest, MANIFEST_FILE, TIMINGS_FILE};
use super::plot::{render_panel, PanelRow, PANEL_COLUMNS};
use crate::error::{Error, Result};
use crate::eval::{fid_1d, load_metrics, render_table, save_metrics, train_real_classifier, trtr_with, trts_with, tstr, FcnConfig, MetricRecord, TableRow};
use crate::gan::{class_setup, run_training, BaselineModel, GanModel, TrainLog, TsganModel};
use crate::signal::{read_rows, standardize_length, working_length, write_rows, SignalDataset, SizeCategory};

pub const CONFIG_FILE: &str = "config.txt";
const LOG_FILE: &str = "train_log.jsonl";
const METRICS_FILE: &str = "eval/metrics.jsonl";
const TABLE_FILE: &str = "eval/table.txt";

fn mkdir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(Error::io(dir))
}

fn relative(run_dir: &Path, p: &Path) -> PathBuf {
    p.strip_prefix(run_dir).unwrap_or(p).to_path_buf()
}

fn class_dir(run_dir: &Path, kind: &str, class: usize) -> PathBuf {
    run_dir.join(kind).join(format!("class-{class}"))
}

fn fcn_config(cfg: &ExperimentConfig) -> FcnConfig {
    FcnConfig {
        epochs: cfg.eval_epochs,
        batch_size: cfg.eval_batch_size,
        seed: cfg.seed(),
        ..FcnConfig::default()
    }
}

/// The configuration of a resumed model must match the requested one in
/// everything but its length.
fn same_but_length(a: &crate::gan::TsganConfig, b: &crate::gan::TsganConfig) -> bool {
    let mut a = a.clone();
    a.steps = b.steps;
    a.epochs = b.epochs;
    a == *b
}

fn train_kind<M: GanModel>(cfg: &ExperimentConfig, ds: &SignalDataset, run_dir: &Path, resume: bool) -> Result<ModelRun> {
    let mut classes = Vec::new();
    for c in 0..ds.class_count {
        let dir = class_dir(run_dir, M::KIND, c);
        let log_path = dir.join(LOG_FILE);
        let (fresh, data) = class_setup::<M>(ds, c, &cfg.gan)?;
        let (mut model, mut log) = if resume && dir.join("state.txt").is_file() {
            let mut model = M::load(&dir)?;
            if !same_but_length(model.config(), &cfg.gan) {
                return Err(Error::config("resume", format!("{} was trained with a different configuration", dir.display())));
            }
            *model.config_mut() = cfg.gan.clone();
            let mut log = if log_path.is_file() { TrainLog::load_jsonl(&log_path)? } else { TrainLog::default() };
            let done = model.steps_done();
            log.records.retain(|r| r.step < done);
            (model, log)
        } else {
            (fresh, TrainLog::default())
        };
        mkdir(&dir)?;
        let planned = cfg.gan.planned_steps(data.len());
        let every = cfg.checkpoint_every;
        let aborted = run_training(&mut model, &data, planned, &mut log, |m, log| {
            if m.steps_done() % every == 0 {
                m.save(&dir)?;
                log.save_jsonl(&log_path)?;
            }
            Ok(())
        })?;
        let files = model.save(&dir)?;
        log.save_jsonl(&log_path)?;
        classes.push(ClassRun {
            class: c,
            label: ds.label_names[c].clone(),
            checkpoint: files.iter().map(|f| relative(run_dir, f)).collect(),
            log: relative(run_dir, &log_path),
            planned_steps: planned,
            steps_done: model.steps_done(),
            aborted,
        });
    }
    Ok(ModelRun {
        kind: M::KIND.to_string(),
        classes,
        samples: Vec::new(),
    })
}

/// Trains one model per class for each selected kind and checkpoints them
/// under the run directory. With `resume`, classes that already have a
/// checkpoint continue from it. A run stopped by a non-finite loss keeps
/// its artifacts and is flagged in the manifest.
pub fn cmd_train(cfg: &ExperimentConfig, resume: bool) -> Result<RunManifest> {
    cfg.validate()?;
    let run_dir = cfg.run_dir();
    mkdir(&run_dir)?;
    cfg.to_kv().save(&run_dir.join(CONFIG_FILE))?;
    let raw = cfg.dataset.load()?;
    let working = working_length(raw.signal_length, &cfg.gan.stft);
    let train_ds = raw.standardized(working);
    let mut models = Vec::new();
    for &kind in cfg.model.kinds() {
        let start = Instant::now();
        models.push(match kind {
            TSGAN => train_kind::<TsganModel>(cfg, &train_ds, &run_dir, resume)?,
            _ => train_kind::<BaselineModel>(cfg, &train_ds, &run_dir, resume)?,
        });
        record_timing(&run_dir, &format!("train.{kind}"), start.elapsed().as_secs_f64())?;
    }
    let manifest = RunManifest {
        dataset: raw.name.clone(),
        seed: cfg.seed(),
        input_hash: cfg.input_hash()?,
        config: cfg.to_kv().entries().iter().cloned().collect(),
        size_category: raw.size_category(),
        signal_count: raw.len(),
        signal_length: raw.signal_length,
        working_length: working,
        labels: raw.label_names.clone(),
        models,
        metrics: Vec::new(),
        table: None,
        plots: Vec::new(),
        timings: PathBuf::from(TIMINGS_FILE),
    };
    manifest.save(&run_dir)?;
    Ok(manifest)
}

fn load_model(kind: &str, dir: &Path) -> Result<Box<dyn Sampler>> {
    Ok(match kind {
        TSGAN => Box::new(TsganModel::load(dir)?),
        BASELINE => Box::new(BaselineModel::load(dir)?),
        _ => return Err(Error::config("model", format!("unknown model kind `{kind}` in manifest"))),
    })
}

/// Object-safe view of a trained generator.
trait Sampler {
    fn draw(&self, n: usize, seed: u64) -> Result<(Vec<Vec<f32>>, Option<tsgan_autograd::Tensor>)>;
}

impl<M: GanModel> Sampler for M {
    fn draw(&self, n: usize, seed: u64) -> Result<(Vec<Vec<f32>>, Option<tsgan_autograd::Tensor>)> {
        self.sample_with_conditions(n, seed)
    }
}

fn samples_path(run_dir: &Path, kind: &str, class: usize) -> PathBuf {
    run_dir.join(kind).join("samples").join(format!("class-{class}.tsv"))
}

/// Writes `count` synthetic series per class for every trained model, in
/// the dataset's own text layout and at its native length. `None` draws as
/// many as the class holds.
pub fn cmd_generate(cfg: &ExperimentConfig, count: Option<usize>) -> Result<RunManifest> {
    let run_dir = cfg.run_dir();
    let mut manifest = RunManifest::load(&run_dir)?;
    let start = Instant::now();
    let raw = cfg.dataset.load()?;
    let totals = SignalDataset::class_counts(&raw.signals, raw.class_count);
    for model_run in &mut manifest.models {
        let kind = model_run.kind.clone();
        let mut files = Vec::new();
        for c in 0..raw.class_count {
            let dir = class_dir(&run_dir, &kind, c);
            let model = load_model(&kind, &dir)?;
            let n = count.or(cfg.samples_per_class).unwrap_or(totals[c]);
            let (series, conditions) = model.draw(n, cfg.seed().wrapping_add(c as u64))?;
            let series: Vec<Vec<f32>> = series.iter().map(|s| standardize_length(s, raw.signal_length)).collect();
            let path = samples_path(&run_dir, &kind, c);
            mkdir(path.parent().expect("samples dir"))?;
            let label = raw.label_names[c].as_str();
            let header = vec![
                format!("model = {kind}"),
                format!("class = {label}"),
                format!("count = {n}"),
                format!("length = {}", raw.signal_length),
                format!("seed = {}", cfg.seed()),
            ];
            write_rows(&path, &header, series.iter().map(|s| (label, s.as_slice())))?;
            files.push(relative(&run_dir, &path));
            if let (true, Some(t)) = (cfg.dump_conditions, conditions) {
                let cpath = path.with_extension("conditions.tsg");
                save_records(
                    &cpath,
                    &[Record {
                        name: "conditions".into(),
                        shape: t.shape().to_vec(),
                        data: t.to_vec(),
                    }],
                )?;
                files.push(relative(&run_dir, &cpath));
            }
        }
        model_run.samples = files;
    }
    record_timing(&run_dir, "generate", start.elapsed().as_secs_f64())?;
    manifest.save(&run_dir)?;
    Ok(manifest)
}

/// Synthetic series per class read back from a model's sample files.
fn read_pool(run_dir: &Path, model_run: &ModelRun, ds: &SignalDataset) -> Result<Vec<Vec<Vec<f32>>>> {
    let mut pool = vec![Vec::new(); ds.class_count];
    for rel in model_run.samples.iter().filter(|p| p.extension().is_some_and(|e| e == "tsv")) {
        let path = run_dir.join(rel);
        for (label, values) in read_rows(&path)? {
            let c = ds
                .label_names
                .iter()
                .position(|l| *l == label)
                .ok_or_else(|| Error::Dataset(format!("{}: label `{label}` is not in the dataset", path.display())))?;
            pool[c].push(values);
        }
    }
    Ok(pool)
}

fn sample_pools(run_dir: &Path, manifest: &RunManifest, ds: &SignalDataset) -> Result<Vec<(String, Vec<Vec<Vec<f32>>>)>> {
    manifest
        .models
        .iter()
        .filter(|m| !m.samples.is_empty())
        .map(|m| Ok((m.kind.clone(), read_pool(run_dir, m, ds)?)))
        .collect()
}

/// TRTR plus FID, TSTR and TRTS for every model with samples, written as a
/// metrics file and a one-row table.
pub fn cmd_evaluate(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let run_dir = cfg.run_dir();
    let mut manifest = RunManifest::load(&run_dir)?;
    let start = Instant::now();
    let raw = cfg.dataset.load()?;
    let ds = raw.standardized(raw.signal_length);
    let pools = sample_pools(&run_dir, &manifest, &ds)?;
    if pools.is_empty() {
        return Err(Error::Eval("no synthetic samples to evaluate; run `generate` first".into()));
    }
    let fcn = fcn_config(cfg);
    let clf = train_real_classifier(&ds, &fcn)?;
    let mut records = vec![MetricRecord::Classification {
        dataset: ds.name.clone(),
        model: "real".into(),
        report: trtr_with(&clf, &ds)?,
    }];
    let real: Vec<&[f32]> = ds.signals.iter().map(|s| s.values.as_slice()).collect();
    for (kind, pool) in &pools {
        let synthetic: Vec<&[f32]> = pool.iter().flatten().map(Vec::as_slice).collect();
        records.push(MetricRecord::Fid(fid_1d(&clf, &ds.name, kind, &real, &synthetic)?));
        for report in [tstr(&ds, pool, &fcn)?, trts_with(&clf, &ds, pool)?] {
            records.push(MetricRecord::Classification {
                dataset: ds.name.clone(),
                model: kind.clone(),
                report,
            });
        }
    }
    let metrics = run_dir.join(METRICS_FILE);
    mkdir(metrics.parent().expect("eval dir"))?;
    save_metrics(&metrics, &records)?;
    let table = run_dir.join(TABLE_FILE);
    let row = TableRow::from_records(&ds.name, &records);
    std::fs::write(&table, render_table(&[row])).map_err(Error::io(&table))?;
    manifest.metrics = vec![PathBuf::from(METRICS_FILE)];
    manifest.table = Some(PathBuf::from(TABLE_FILE));
    record_timing(&run_dir, "evaluate", start.elapsed().as_secs_f64())?;
    manifest.save(&run_dir)?;
    Ok(manifest)
}

/// One SVG per class: baseline samples, TSGAN samples and real series, five
/// of each.
pub fn cmd_plot(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let run_dir = cfg.run_dir();
    let mut manifest = RunManifest::load(&run_dir)?;
    let raw = cfg.dataset.load()?;
    let ds = raw.standardized(raw.signal_length);
    let pools: BTreeMap<String, Vec<Vec<Vec<f32>>>> = sample_pools(&run_dir, &manifest, &ds)?.into_iter().collect();
    if pools.is_empty() {
        return Err(Error::Eval("no synthetic samples to plot; run `generate` first".into()));
    }
    let plot_dir = run_dir.join("plots");
    mkdir(&plot_dir)?;
    let mut plots = Vec::new();
    for c in 0..ds.class_count {
        let first = |kind: &str| pools.get(kind).map(|p| p[c].iter().take(PANEL_COLUMNS).map(Vec::as_slice).collect());
        let real: Vec<&[f32]> = ds.class_series(c).into_iter().take(PANEL_COLUMNS).collect();
        let rows = [
            PanelRow {
                label: "WGAN",
                series: first(BASELINE),
            },
            PanelRow {
                label: "TSGAN",
                series: first(TSGAN),
            },
            PanelRow {
                label: "Real",
                series: Some(real),
            },
        ];
        let svg = render_panel(&format!("{}, class {}", ds.name, ds.label_names[c]), &rows);
        let path = plot_dir.join(format!("class-{c}.svg"));
        std::fs::write(&path, svg).map_err(Error::io(&path))?;
        plots.push(relative(&run_dir, &path));
    }
    manifest.plots = plots;
    manifest.save(&run_dir)?;
    Ok(manifest)
}

/// Train, generate, evaluate and plot in one go.
pub fn cmd_run(cfg: &ExperimentConfig, resume: bool) -> Result<RunManifest> {
    cmd_train(cfg, resume)?;
    cmd_generate(cfg, None)?;
    cmd_evaluate(cfg)?;
    cmd_plot(cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub dataset: String,
    pub size_category: SizeCategory,
    pub row: TableRow,
    pub wgan_fid: Option<f64>,
    pub tsgan_fid: Option<f64>,
}

impl DatasetSummary {
    fn from_records(manifest: &RunManifest, records: &[MetricRecord]) -> Self {
        let fid = |kind: &str| {
            records.iter().find_map(|r| match r {
                MetricRecord::Fid(f) if f.model == kind => Some(f.fid),
                _ => None,
            })
        };
        DatasetSummary {
            dataset: manifest.dataset.clone(),
            size_category: manifest.size_category,
            row: TableRow::from_records(&manifest.dataset, records),
            wgan_fid: fid(BASELINE),
            tsgan_fid: fid(TSGAN),
        }
    }
}

/// Win/tie/loss counts of TSGAN against the baseline for one metric and
/// size category.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub metric: String,
    pub size_category: Option<SizeCategory>,
    pub tsgan_wins: usize,
    pub ties: usize,
    pub wgan_wins: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub datasets: Vec<DatasetSummary>,
    pub tallies: Vec<Tally>,
}

/// Scores closer than this count as a tie.
const TIE_TOL: f64 = 1e-9;

pub fn tally(datasets: &[DatasetSummary]) -> Vec<Tally> {
    type Pick = fn(&DatasetSummary) -> (Option<f64>, Option<f64>);
    let metrics: [(&str, bool, Pick); 3] = [
        ("TRTS", true, |d| (d.row.tsgan_trts, d.row.wgan_trts)),
        ("TSTR", true, |d| (d.row.tsgan_tstr, d.row.wgan_tstr)),
        ("FID", false, |d| (d.tsgan_fid, d.wgan_fid)),
    ];
    let categories = [None, Some(SizeCategory::Small), Some(SizeCategory::Medium), Some(SizeCategory::Large)];
    let mut out = Vec::new();
    for (name, higher_better, pick) in metrics {
        for category in categories {
            let mut t = Tally {
                metric: name.to_string(),
                size_category: category,
                ..Tally::default()
            };
            for d in datasets.iter().filter(|d| category.is_none_or(|c| c == d.size_category)) {
                let (Some(ts), Some(wg)) = pick(d) else { continue };
                let diff = if higher_better { ts - wg } else { wg - ts };
                match diff {
                    d if d.abs() <= TIE_TOL => t.ties += 1,
                    d if d > 0.0 => t.tsgan_wins += 1,
                    _ => t.wgan_wins += 1,
                }
            }
            out.push(t);
        }
    }
    out
}

pub fn render_batch(report: &BatchReport) -> String {
    let rows: Vec<TableRow> = report.datasets.iter().map(|d| d.row.clone()).collect();
    let mut out = render_table(&rows);
    out.push_str("\nTSGAN vs WGAN (wins / ties / losses)\n");
    for t in &report.tallies {
        let cat = t.size_category.map_or("all", SizeCategory::as_str);
        out.push_str(&format!("{:<5} {:<7} {} / {} / {}\n", t.metric, cat, t.tsgan_wins, t.ties, t.wgan_wins));
    }
    out
}

/// Runs or collects every entry of `entries` in parallel and aggregates
/// them. An entry naming a run directory (one holding a manifest) is read
/// as is; anything else is a dataset spec run end to end with both models.
pub fn cmd_batch(base: &ExperimentConfig, entries: &[String]) -> Result<BatchReport> {
    if entries.is_empty() {
        return Err(Error::config("dataset", "batch needs at least one dataset"));
    }
    let results: Vec<Result<(RunManifest, Vec<MetricRecord>)>> = entries
        .par_iter()
        .map(|entry| {
            let as_dir = Path::new(entry);
            let run_dir = if as_dir.join(MANIFEST_FILE).is_file() {
                as_dir.to_path_buf()
            } else {
                let mut cfg = base.clone();
                cfg.dataset = DatasetSpec::resolve(entry)?;
                cfg.model = ModelChoice::Both;
                cfg.validate()?;
                cmd_run(&cfg, false)?;
                cfg.run_dir()
            };
            let manifest = RunManifest::load(&run_dir)?;
            let metrics = manifest.metrics.first().ok_or_else(|| Error::Missing(run_dir.join(METRICS_FILE)))?;
            let records = load_metrics(&run_dir.join(metrics))?;
            Ok((manifest, records))
        })
        .collect();
    let mut datasets = Vec::new();
    for r in results {
        let (manifest, records) = r?;
        datasets.push(DatasetSummary::from_records(&manifest, &records));
    }
    let report = BatchReport {
        tallies: tally(&datasets),
        datasets,
    };
    mkdir(&base.out)?;
    let summary = base.out.join("batch-summary.txt");
    std::fs::write(&summary, render_batch(&report)).map_err(Error::io(&summary))?;
    let json = base.out.join("batch.json");
    std::fs::write(&json, serde_json::to_string_pretty(&report).expect("report serializes") + "\n").map_err(Error::io(&json))?;
    Ok(report)
}
