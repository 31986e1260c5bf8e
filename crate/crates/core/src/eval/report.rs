use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::fid::FidReport;
use super::protocol::ClassificationReport;
use crate::error::{Error, Result};

/// One line of a metrics file. Fields serialize in declaration order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MetricRecord {
    Fid(FidReport),
    Classification {
        dataset: String,
        /// `real` for TRTR, otherwise the generator that produced the
        /// synthetic side.
        model: String,
        #[serde(flatten)]
        report: ClassificationReport,
    },
}

pub fn save_metrics(path: &Path, records: &[MetricRecord]) -> Result<()> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("metric records serialize");
        out.push(b'\n');
    }
    let mut f = std::fs::File::create(path).map_err(Error::io(path))?;
    f.write_all(&out).map_err(Error::io(path))
}

pub fn load_metrics(path: &Path) -> Result<Vec<MetricRecord>> {
    let f = std::fs::File::open(path).map_err(Error::io(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(Error::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

pub const TABLE_COLUMNS: [&str; 6] = ["Data Set", "WGAN TRTS", "TSGAN TRTS", "WGAN TSTR", "TSGAN TSTR", "TRTR"];

/// Accuracies of one dataset, in percent. Missing entries print as `-`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub dataset: String,
    pub wgan_trts: Option<f64>,
    pub tsgan_trts: Option<f64>,
    pub wgan_tstr: Option<f64>,
    pub tsgan_tstr: Option<f64>,
    pub trtr: Option<f64>,
}

impl TableRow {
    /// Collects the row for `dataset` from its metric records.
    pub fn from_records(dataset: &str, records: &[MetricRecord]) -> Self {
        let mut row = TableRow {
            dataset: dataset.to_string(),
            ..TableRow::default()
        };
        for r in records {
            let MetricRecord::Classification { model, report, .. } = r else { continue };
            use super::protocol::Protocol::*;
            let slot = match (report.protocol, model.as_str()) {
                (Trtr, _) => &mut row.trtr,
                (Trts, "wgan-baseline") => &mut row.wgan_trts,
                (Trts, "tsgan") => &mut row.tsgan_trts,
                (Tstr, "wgan-baseline") => &mut row.wgan_tstr,
                (Tstr, "tsgan") => &mut row.tsgan_tstr,
                _ => continue,
            };
            *slot = Some(report.accuracy);
        }
        row
    }

    pub fn cells(&self) -> [String; 6] {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
        [
            self.dataset.clone(),
            fmt(self.wgan_trts),
            fmt(self.tsgan_trts),
            fmt(self.wgan_tstr),
            fmt(self.tsgan_tstr),
            fmt(self.trtr),
        ]
    }
}

/// Plain-text table with a header line and right-aligned numbers.
pub fn render_table(rows: &[TableRow]) -> String {
    let body: Vec<[String; 6]> = rows.iter().map(TableRow::cells).collect();
    let mut widths = TABLE_COLUMNS.map(str::len);
    for cells in &body {
        for (w, c) in widths.iter_mut().zip(cells) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| if i == 0 { format!("{c:<w$}", w = widths[0]) } else { format!("{c:>w$}", w = widths[i]) })
            .collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(&TABLE_COLUMNS.map(String::from));
    out += &line(&widths.map(|w| "-".repeat(w)));
    for cells in &body {
        out += &line(cells);
    }
    out
}
