use std::io::Write;
use std::path::Path;

use super::config::ReportFormat;
use super::metrics::MetricsReport;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 9] = [
    "method",
    "pca_k",
    "haar_levels",
    "train_acc",
    "test_acc",
    "precision",
    "recall",
    "f1",
    "train_time_s",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EmitOptions {
    /// Write `NA` (CSV) / `null` (JSON) instead of wall-clock timings, so
    /// output is reproducible byte for byte.
    pub redact_timing: bool,
}

fn fmt_rate(v: f64) -> String {
    format!("{v:.6}")
}

/// Writes one row per report, in the given order. Precision, recall and F1
/// are test-split values.
pub fn write_csv<W: Write>(reports: &[MetricsReport], writer: W, opts: EmitOptions) -> Result<()> {
    let err = |e: csv::Error| Error::Structural(format!("report csv: {e}"));
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(CSV_HEADER).map_err(err)?;
    for r in reports {
        let timing = if opts.redact_timing {
            "NA".to_owned()
        } else {
            fmt_rate(r.train_time_s)
        };
        csv.write_record([
            r.method.to_string(),
            r.pca_k.map_or_else(|| "none".to_owned(), |k| k.to_string()),
            r.haar_levels.to_string(),
            fmt_rate(r.train.accuracy),
            fmt_rate(r.test.accuracy),
            fmt_rate(r.test.precision),
            fmt_rate(r.test.recall),
            fmt_rate(r.test.f1),
            timing,
        ])
        .map_err(err)?;
    }
    csv.flush()
        .map_err(|e| Error::Structural(format!("report csv: {e}")))?;
    Ok(())
}

/// Pretty-printed JSON array of full reports.
pub fn write_json<W: Write>(reports: &[MetricsReport], writer: W, opts: EmitOptions) -> Result<()> {
    let mut value =
        serde_json::to_value(reports).map_err(|e| Error::Structural(format!("report json: {e}")))?;
    if opts.redact_timing {
        if let Some(items) = value.as_array_mut() {
            for item in items {
                item["train_time_s"] = serde_json::Value::Null;
            }
        }
    }
    let mut writer = writer;
    serde_json::to_writer_pretty(&mut writer, &value)
        .map_err(|e| Error::Structural(format!("report json: {e}")))?;
    writer
        .write_all(b"\n")
        .map_err(|e| Error::Structural(format!("report json: {e}")))
}

/// Writes `reports` to `path` in `format`.
pub fn emit_report(
    reports: &[MetricsReport],
    format: ReportFormat,
    path: &Path,
    opts: EmitOptions,
) -> Result<()> {
    if reports.is_empty() {
        return Err(Error::Argument("no reports to emit".into()));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    match format {
        ReportFormat::Csv => write_csv(reports, &mut out, opts)?,
        ReportFormat::Json => write_json(reports, &mut out, opts)?,
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reads reports previously written as JSON.
pub fn read_json_reports(path: &Path) -> Result<Vec<MetricsReport>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| {
        Error::Dataset(format!("{}: not a report list: {e}", path.display()))
    })
}
