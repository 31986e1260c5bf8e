use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSeries {
    pub label: usize,
    pub values: Vec<f32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeCategory {
    Small,
    Medium,
    Large,
}

impl SizeCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            SizeCategory::Small => "small",
            SizeCategory::Medium => "medium",
            SizeCategory::Large => "large",
        }
    }
}

/// 0–499 signals are small, 500–1000 medium, anything larger is large.
pub fn size_category(n_signals: usize) -> SizeCategory {
    match n_signals {
        0..=499 => SizeCategory::Small,
        500..=1000 => SizeCategory::Medium,
        _ => SizeCategory::Large,
    }
}

/// Labeled univariate series with class ids `0..class_count`.
///
/// Rows `[0, train_count)` came from the original training split and the
/// rest from the test split.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalDataset {
    pub name: String,
    pub signals: Vec<LabeledSeries>,
    pub signal_length: usize,
    pub class_count: usize,
    pub train_count: usize,
    /// Original label text for each class id.
    pub label_names: Vec<String>,
}

impl SignalDataset {
    pub fn new(name: impl Into<String>, signals: Vec<LabeledSeries>, train_count: usize, label_names: Vec<String>) -> Result<Self> {
        let name = name.into();
        let Some(first) = signals.first() else {
            return Err(Error::Dataset(format!("{name}: no signals")));
        };
        let signal_length = first.values.len();
        if signal_length < 2 {
            return Err(Error::Dataset(format!("{name}: series need at least 2 samples")));
        }
        if let Some((i, s)) = signals.iter().enumerate().find(|(_, s)| s.values.len() != signal_length) {
            return Err(Error::Dataset(format!(
                "{name}: row {i} has {} values, expected {signal_length}",
                s.values.len()
            )));
        }
        let class_count = label_names.len();
        if let Some(s) = signals.iter().find(|s| s.label >= class_count) {
            return Err(Error::Dataset(format!("{name}: label {} outside 0..{class_count}", s.label)));
        }
        let mut seen = vec![false; class_count];
        signals.iter().for_each(|s| seen[s.label] = true);
        if seen.iter().any(|&b| !b) {
            return Err(Error::Dataset(format!("{name}: some class ids have no signals")));
        }
        if train_count > signals.len() {
            return Err(Error::Dataset(format!("{name}: train split larger than dataset")));
        }
        Ok(SignalDataset {
            name,
            signals,
            signal_length,
            class_count,
            train_count,
            label_names,
        })
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    pub fn size_category(&self) -> SizeCategory {
        size_category(self.signals.len())
    }

    pub fn train_split(&self) -> &[LabeledSeries] {
        &self.signals[..self.train_count]
    }

    pub fn test_split(&self) -> &[LabeledSeries] {
        &self.signals[self.train_count..]
    }

    /// Every series of class `c`, from both splits, in file order.
    pub fn class_series(&self, c: usize) -> Vec<&[f32]> {
        self.signals.iter().filter(|s| s.label == c).map(|s| s.values.as_slice()).collect()
    }

    pub fn class_counts(rows: &[LabeledSeries], class_count: usize) -> Vec<usize> {
        let mut counts = vec![0; class_count];
        rows.iter().for_each(|s| counts[s.label] += 1);
        counts
    }

    /// Resamples every series to `target_length` and z-normalizes it.
    pub fn standardized(&self, target_length: usize) -> SignalDataset {
        let signals = self
            .signals
            .iter()
            .map(|s| LabeledSeries {
                label: s.label,
                values: znormalize(&standardize_length(&s.values, target_length)),
            })
            .collect();
        SignalDataset {
            signals,
            signal_length: target_length,
            ..self.clone()
        }
    }
}

/// Reads both splits and concatenates them (train rows first).
pub fn load_dataset(train_path: &Path, test_path: &Path) -> Result<SignalDataset> {
    let mut rows = read_rows(train_path)?;
    let train_count = rows.len();
    rows.extend(read_rows(test_path)?);
    if rows.is_empty() {
        return Err(Error::Dataset(format!("{} and {} hold no rows", train_path.display(), test_path.display())));
    }
    let name = dataset_name(train_path);
    let label_names = sorted_labels(rows.iter().map(|r| r.0.as_str()));
    let signals = rows
        .into_iter()
        .map(|(label, values)| LabeledSeries {
            label: label_names.iter().position(|l| *l == label).expect("label collected above"),
            values,
        })
        .collect();
    SignalDataset::new(name, signals, train_count, label_names)
}

/// `Coffee_TRAIN.tsv` gives `Coffee`.
pub fn dataset_name(path: &Path) -> String {
    let stem = path.file_name().and_then(|s| s.to_str()).unwrap_or("dataset");
    let stem = stem.split('.').next().unwrap_or(stem);
    stem.strip_suffix("_TRAIN").or_else(|| stem.strip_suffix("_TEST")).unwrap_or(stem).to_string()
}

/// Distinct labels, numerically ordered when every label parses as a number.
fn sorted_labels<'a>(labels: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for l in labels {
        if !out.iter().any(|o| o == l) {
            out.push(l.to_string());
        }
    }
    let numeric: Option<Vec<f64>> = out.iter().map(|l| l.parse::<f64>().ok()).collect();
    match numeric {
        Some(values) => {
            let mut paired: Vec<(f64, String)> = values.into_iter().zip(out).collect();
            paired.sort_by(|a, b| a.0.total_cmp(&b.0));
            paired.into_iter().map(|p| p.1).collect()
        }
        None => {
            out.sort();
            out
        }
    }
}

fn open_text(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(Error::io(path))?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::new(reader)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Delimiter {
    Tab,
    Comma,
    Whitespace,
}

fn sniff(line: &str) -> Delimiter {
    if line.contains('\t') {
        Delimiter::Tab
    } else if line.contains(',') {
        Delimiter::Comma
    } else {
        Delimiter::Whitespace
    }
}

/// One `(label, values)` per non-empty, non-comment line.
pub fn read_rows(path: &Path) -> Result<Vec<(String, Vec<f32>)>> {
    let reader = open_text(path)?;
    let mut delimiter = None;
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(Error::io(path))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let fields: Vec<&str> = match *delimiter.get_or_insert_with(|| sniff(line)) {
            Delimiter::Tab => line.split('\t').map(str::trim).collect(),
            Delimiter::Comma => line.split(',').map(str::trim).collect(),
            Delimiter::Whitespace => line.split_whitespace().collect(),
        };
        let (label, rest) = fields.split_first().expect("non-empty line");
        if label.is_empty() {
            return Err(parse_err("empty label".into()));
        }
        if rest.is_empty() {
            return Err(parse_err("row has a label but no values".into()));
        }
        let values = rest
            .iter()
            .map(|f| match f.parse::<f32>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(parse_err(format!("`{f}` is not a finite number"))),
            })
            .collect::<Result<Vec<f32>>>()?;
        if let Some((_, first)) = rows.first() {
            let first: &Vec<f32> = first;
            if first.len() != values.len() {
                return Err(parse_err(format!("{} values, earlier rows have {}", values.len(), first.len())));
            }
        }
        // UCR writes integer labels as floats ("1.0000000e+00"); keep them compact.
        let label = match label.parse::<f64>() {
            Ok(v) if v.fract() == 0.0 && v.abs() < 1e15 => format!("{}", v as i64),
            _ => label.to_string(),
        };
        rows.push((label, values));
    }
    Ok(rows)
}

/// Writes rows in the tab-separated UCR layout, preceded by `#` comment lines.
pub fn write_rows<'a>(path: &Path, header: &[String], rows: impl IntoIterator<Item = (&'a str, &'a [f32])>) -> Result<()> {
    let file = File::create(path).map_err(Error::io(path))?;
    let mut w = std::io::BufWriter::new(file);
    let go = || -> std::io::Result<()> {
        for h in header {
            writeln!(w, "# {h}")?;
        }
        for (label, values) in rows {
            write!(w, "{label}")?;
            for v in values {
                write!(w, "\t{v}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    };
    go().map_err(Error::io(path))
}

/// Zero mean, unit (population) standard deviation. Series with a standard
/// deviation below 1e-8 map to zeros.
pub fn znormalize(series: &[f32]) -> Vec<f32> {
    let n = series.len() as f64;
    let mean = series.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = series.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < 1e-8 {
        return vec![0.0; series.len()];
    }
    series.iter().map(|&v| ((v as f64 - mean) / std) as f32).collect()
}

/// Linear-interpolation resampling that keeps both endpoints.
pub fn standardize_length(series: &[f32], target_length: usize) -> Vec<f32> {
    assert!(!series.is_empty() && target_length >= 2, "resampling needs data and a target of at least 2");
    let n = series.len();
    if n == target_length {
        return series.to_vec();
    }
    if n == 1 {
        return vec![series[0]; target_length];
    }
    let scale = (n - 1) as f64 / (target_length - 1) as f64;
    (0..target_length)
        .map(|i| {
            let pos = i as f64 * scale;
            let left = (pos.floor() as usize).min(n - 2);
            let frac = pos - left as f64;
            (series[left] as f64 * (1.0 - frac) + series[left + 1] as f64 * frac) as f32
        })
        .collect()
}
