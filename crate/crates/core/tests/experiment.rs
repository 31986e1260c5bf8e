use std::path::{Path, PathBuf};
use std::process::Command;

use tsgan::eval::{load_metrics, MetricRecord, TableRow};
use tsgan::experiment::*;
use tsgan::kv::KvFile;
use tsgan::signal::SizeCategory;

fn tiny(out: &Path, extra: &[(&str, &str)]) -> ExperimentConfig {
    let mut kv: Vec<(String, String)> = [
        ("dataset", "toy:6:64:3"),
        ("width", "4"),
        ("z_dim", "8"),
        ("bottleneck", "8"),
        ("batch_size", "4"),
        ("n_critic", "2"),
        ("steps", "4"),
        ("checkpoint_every", "2"),
        ("eval_epochs", "2"),
        ("eval_batch_size", "4"),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    kv.push(("out".into(), out.display().to_string()));
    kv.extend(extra.iter().map(|(k, v)| (k.to_string(), v.to_string())));
    ExperimentConfig::load(None, &kv).unwrap()
}

/// Every file under `dir` except wall-clock timings, with its bytes.
fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != TIMINGS_FILE {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn full_run_lists_existing_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny(tmp.path(), &[]);
    let m = cmd_run(&cfg, false).unwrap();
    let dir = cfg.run_dir();
    assert_eq!(dir, tmp.path().join("toy-sine-square-s0"));
    assert_eq!(m.models.iter().map(|m| m.kind.as_str()).collect::<Vec<_>>(), vec![BASELINE, TSGAN]);
    for model in &m.models {
        assert_eq!(model.classes.len(), 2);
        assert!(model.classes.iter().all(|c| !c.checkpoint.is_empty() && c.steps_done == 4 && c.aborted.is_none()));
        assert_eq!(model.samples.len(), 2);
    }
    for p in m.listed_paths() {
        assert!(dir.join(&p).is_file(), "{} missing", p.display());
    }
    assert_eq!(RunManifest::load(&dir).unwrap(), m);
    assert!(dir.join(CONFIG_FILE).is_file());

    let records = load_metrics(&dir.join(&m.metrics[0])).unwrap();
    let row = TableRow::from_records(&m.dataset, &records);
    for v in [row.wgan_trts, row.tsgan_trts, row.wgan_tstr, row.tsgan_tstr, row.trtr] {
        let v = v.expect("every table cell is filled");
        assert!((0.0..=100.0).contains(&v));
    }
    let fids: Vec<f64> = records
        .iter()
        .filter_map(|r| match r {
            MetricRecord::Fid(f) => Some(f.fid),
            _ => None,
        })
        .collect();
    assert_eq!(fids.len(), 2);
    assert!(fids.iter().all(|f| f.is_finite() && *f >= 0.0));

    let table = std::fs::read_to_string(dir.join(m.table.as_ref().unwrap())).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.lines().next().unwrap().starts_with("Data Set"));

    assert_eq!(m.plots.len(), 2);
    for p in &m.plots {
        let svg = std::fs::read_to_string(dir.join(p)).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("class=\"row\"").count(), 3);
        assert_eq!(svg.matches("<polyline").count(), 15);
    }

    // Evaluating again rewrites identical metrics.
    let before = std::fs::read(dir.join(&m.metrics[0])).unwrap();
    cmd_evaluate(&cfg).unwrap();
    assert_eq!(std::fs::read(dir.join(&m.metrics[0])).unwrap(), before);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ca, cb) = (tiny(a.path(), &[("model", "tsgan")]), tiny(b.path(), &[("model", "tsgan")]));
    cmd_run(&ca, false).unwrap();
    cmd_run(&cb, false).unwrap();
    let (sa, sb) = (snapshot(&ca.run_dir()), snapshot(&cb.run_dir()));
    // The config file records the output root, which differs on purpose.
    let strip = |s: Vec<(PathBuf, Vec<u8>)>| s.into_iter().filter(|(p, _)| p != Path::new(CONFIG_FILE) && p != Path::new(MANIFEST_FILE)).collect::<Vec<_>>();
    assert_eq!(strip(sa), strip(sb));
    let (ma, mb) = (RunManifest::load(&ca.run_dir()).unwrap(), RunManifest::load(&cb.run_dir()).unwrap());
    assert_eq!(ma.input_hash, mb.input_hash);
    assert_eq!(ma.models, mb.models);

    // Same directory, same command: every file but the timings is unchanged.
    let before = snapshot(&ca.run_dir());
    cmd_run(&ca, false).unwrap();
    assert_eq!(snapshot(&ca.run_dir()), before);
}

#[test]
fn resuming_matches_an_uninterrupted_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let full = tiny(a.path(), &[]);
    cmd_train(&full, false).unwrap();

    let short = tiny(b.path(), &[("steps", "2")]);
    cmd_train(&short, false).unwrap();
    let resumed = tiny(b.path(), &[]);
    let m = cmd_train(&resumed, true).unwrap();
    assert!(m.models.iter().flat_map(|m| &m.classes).all(|c| c.steps_done == 4));
    let keep = |s: Vec<(PathBuf, Vec<u8>)>| s.into_iter().filter(|(p, _)| p.components().count() > 1).collect::<Vec<_>>();
    assert_eq!(keep(snapshot(&full.run_dir())), keep(snapshot(&resumed.run_dir())));

    let other = tiny(b.path(), &[("lambda", "5")]);
    assert!(cmd_train(&other, true).is_err(), "resume with a different configuration");
}

#[test]
fn generate_writes_headers_and_requested_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny(tmp.path(), &[("model", "wgan"), ("dump_conditions", "true")]);
    cmd_train(&cfg, false).unwrap();
    let m = cmd_generate(&cfg, Some(0)).unwrap();
    let files = &m.model(BASELINE).unwrap().samples;
    assert_eq!(files.len(), 2, "the baseline has no conditions to dump");
    for f in files {
        let text = std::fs::read_to_string(cfg.run_dir().join(f)).unwrap();
        assert!(text.lines().all(|l| l.starts_with('#')), "{text}");
        assert!(text.contains("count = 0"));
    }
    assert!(cmd_evaluate(&cfg).is_err(), "nothing to evaluate");

    let m = cmd_generate(&cfg, None).unwrap();
    let rows = tsgan::signal::read_rows(&cfg.run_dir().join(&m.model(BASELINE).unwrap().samples[1])).unwrap();
    assert_eq!(rows.len(), 6, "defaults to the class size");
    assert!(rows.iter().all(|(label, v)| label == "square" && v.len() == 64));

    let cfg = tiny(tmp.path(), &[("model", "tsgan"), ("dump_conditions", "true"), ("seed", "1")]);
    cmd_train(&cfg, false).unwrap();
    let m = cmd_generate(&cfg, Some(3)).unwrap();
    assert_eq!(m.model(TSGAN).unwrap().samples.len(), 4);
}

#[test]
fn commands_need_their_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny(tmp.path(), &[]);
    assert!(cmd_generate(&cfg, None).is_err());
    assert!(cmd_evaluate(&cfg).is_err());
    assert!(cmd_plot(&cfg).is_err());
    assert!(cmd_batch(&cfg, &[]).is_err());
}

#[test]
fn config_parsing() {
    let load = |pairs: &[(&str, &str)]| {
        let kv: Vec<(String, String)> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        ExperimentConfig::load(None, &kv)
    };
    assert!(load(&[]).is_err(), "dataset is required");
    assert!(load(&[("dataset", "toy"), ("bogus", "1")]).is_err());
    assert!(load(&[("dataset", "toy"), ("model", "gan")]).is_err());
    assert!(load(&[("dataset", "toy"), ("z_dim", "0")]).is_err());
    assert!(load(&[("dataset", "toy"), ("epochs", "x")]).is_err());
    assert!(load(&[("dataset", "toy:1")]).is_err());
    assert!(load(&[("dataset", "/nonexistent/Foo_TRAIN.tsv")]).is_err());
    assert!(load(&[("dataset", "notes.txt")]).is_err());

    let cfg = load(&[("dataset", "toy:10:32:4"), ("seed", "9"), ("model", "both"), ("out", "x")]).unwrap();
    assert_eq!(cfg.dataset, DatasetSpec::Toy { per_class: 10, length: 32, seed: 4 });
    assert_eq!(cfg.seed(), 9);
    assert_eq!(cfg.run_dir(), Path::new("x/toy-sine-square-s9"));
    // Later overrides win.
    let cfg = load(&[("dataset", "toy"), ("seed", "1"), ("seed", "2")]).unwrap();
    assert_eq!(cfg.seed(), 2);

    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("run.txt");
    std::fs::write(&file, "# comment\ndataset = toy\nlambda = 3\n").unwrap();
    let cfg = ExperimentConfig::load(Some(&file), &[("n_critic".into(), "2".into())]).unwrap();
    assert_eq!((cfg.gan.lambda, cfg.gan.n_critic), (3.0, 2));
}

#[test]
fn dataset_specs_resolve_files() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let train = data.join("GunPoint_TRAIN.tsv");
    let from_file = DatasetSpec::resolve(train.to_str().unwrap()).unwrap();
    let from_dir = DatasetSpec::resolve(data.to_str().unwrap()).unwrap();
    assert_eq!(from_file, from_dir);
    assert_eq!(
        from_file,
        DatasetSpec::Files {
            train: train.clone(),
            test: data.join("GunPoint_TEST.tsv")
        }
    );
    assert_eq!(from_file.name(), "GunPoint");
    let ds = from_file.load().unwrap();
    assert_eq!((ds.len(), ds.class_count, ds.signal_length), (200, 2, 150));
    assert_eq!(ds.size_category(), SizeCategory::Small);
}

#[test]
fn input_hash_survives_reserialization() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/GunPoint_TRAIN.tsv");
    let cfg = ExperimentConfig::load(None, &[("dataset".into(), data.display().to_string()), ("seed".into(), "4".into())]).unwrap();
    let text = cfg.to_kv().render();
    let back = ExperimentConfig::from_kv(&KvFile::parse(&text).unwrap()).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.input_hash().unwrap(), cfg.input_hash().unwrap());
    let mut moved = cfg.clone();
    moved.out = PathBuf::from("elsewhere");
    assert_eq!(moved.input_hash().unwrap(), cfg.input_hash().unwrap());
    let mut other = cfg.clone();
    other.gan.seed = 5;
    assert_ne!(other.input_hash().unwrap(), cfg.input_hash().unwrap());
    assert_eq!(cfg.input_hash().unwrap().len(), 64);
}

fn summary(name: &str, category: SizeCategory, tsgan: (f64, f64, f64), wgan: (f64, f64, f64)) -> DatasetSummary {
    DatasetSummary {
        dataset: name.into(),
        size_category: category,
        row: TableRow {
            dataset: name.into(),
            tsgan_trts: Some(tsgan.0),
            tsgan_tstr: Some(tsgan.1),
            wgan_trts: Some(wgan.0),
            wgan_tstr: Some(wgan.1),
            trtr: Some(100.0),
        },
        tsgan_fid: Some(tsgan.2),
        wgan_fid: Some(wgan.2),
    }
}

#[test]
fn tallies_count_each_dataset_once_per_metric() {
    let sets = vec![
        summary("a", SizeCategory::Small, (90.0, 80.0, 1.0), (70.0, 80.0, 2.0)),
        summary("b", SizeCategory::Small, (60.0, 50.0, 5.0), (70.0, 40.0, 3.0)),
        summary("c", SizeCategory::Large, (75.0, 75.0, 1.0), (70.0, 80.0, 1.0)),
    ];
    let t = tally(&sets);
    assert_eq!(t.len(), 12);
    let get = |metric: &str, cat: Option<SizeCategory>| t.iter().find(|x| x.metric == metric && x.size_category == cat).unwrap();
    for x in &t {
        let expected = match x.size_category {
            None => 3,
            Some(SizeCategory::Small) => 2,
            Some(SizeCategory::Large) => 1,
            Some(SizeCategory::Medium) => 0,
        };
        assert_eq!(x.tsgan_wins + x.ties + x.wgan_wins, expected, "{x:?}");
    }
    let trts = get("TRTS", None);
    assert_eq!((trts.tsgan_wins, trts.ties, trts.wgan_wins), (2, 0, 1));
    let tstr = get("TSTR", Some(SizeCategory::Small));
    assert_eq!((tstr.tsgan_wins, tstr.ties, tstr.wgan_wins), (1, 1, 0));
    let fid = get("FID", None);
    assert_eq!((fid.tsgan_wins, fid.ties, fid.wgan_wins), (1, 1, 1), "lower FID wins");
}

#[test]
fn batch_collects_finished_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tiny(tmp.path(), &[]);
    let b = tiny(tmp.path(), &[("dataset", "toy:6:64:4"), ("seed", "1")]);
    cmd_run(&a, false).unwrap();
    cmd_run(&b, false).unwrap();
    let entries = [a.run_dir(), b.run_dir()].map(|p| p.display().to_string());
    let report = cmd_batch(&a, &entries).unwrap();
    assert_eq!(report.datasets.len(), 2);
    assert!(report.tallies.iter().all(|t| t.tsgan_wins + t.ties + t.wgan_wins == if t.size_category.is_none() || t.size_category == Some(SizeCategory::Small) { 2 } else { 0 }));
    let text = std::fs::read_to_string(tmp.path().join("batch-summary.txt")).unwrap();
    assert_eq!(text, render_batch(&report));
    assert!(tmp.path().join("batch.json").is_file());
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_tsgan")).args(args).output().unwrap()
}

#[test]
fn cli_runs_the_pipeline_and_reports_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().display().to_string();
    let common = [
        "--dataset", "toy:6:64:3", "--model", "tsgan", "--seed", "2", "--out", &out, "--set", "width=4", "--set", "z_dim=8", "--set", "steps=2", "--set",
        "eval_epochs=1", "--set", "batch_size=4",
    ];
    for verb in ["train", "generate", "evaluate", "plot"] {
        let o = cli(&[&[verb][..], &common[..]].concat());
        assert!(o.status.success(), "{verb}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let run_dir = tmp.path().join("toy-sine-square-s2");
    assert!(run_dir.join("plots/class-1.svg").is_file());
    assert!(run_dir.join("eval/table.txt").is_file());

    let o = cli(&["train", "--dataset", "toy", "--set", "z_dim=0", "--out", &out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "));
    let o = cli(&["evaluate", "--dataset", "toy", "--out", &tmp.path().join("empty").display().to_string()]);
    assert_eq!(o.status.code(), Some(1));
    let o = cli(&["train", "--set", "nonsense"]);
    assert_eq!(o.status.code(), Some(1));
}
