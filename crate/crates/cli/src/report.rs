//! Report emission: JSON with 17-significant-digit floats, CSV with a fixed
//! column order.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use focklab_core::harness::{InstanceRecord, Report};
use serde::Serialize;
use serde_json::ser::Formatter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, thiserror::Error)]
#[error("cannot write {path}: {source}")]
pub struct WriteError {
    pub path: PathBuf,
    pub source: io::Error,
}

/// Compact JSON whose floats are written as `{:.16e}`.
struct SciFormatter;

impl Formatter for SciFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    value
        .serialize(&mut ser)
        .expect("reports serialize to JSON");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

pub const CSV_COLUMNS: [&str; 14] = [
    "instance_id",
    "p",
    "q",
    "t",
    "alpha",
    "beta",
    "weight_kind",
    "measure_kind",
    "criterion",
    "lower",
    "upper",
    "ratio_low",
    "ratio_high",
    "verdict",
];

fn record_row(r: &InstanceRecord) -> Vec<String> {
    vec![
        r.instance_id.clone(),
        float(r.p),
        float(r.q),
        opt(r.t),
        float(r.alpha),
        opt(r.beta),
        r.weight_kind.clone(),
        r.measure_kind.clone(),
        opt(r.criterion),
        opt(r.lower),
        opt(r.upper),
        opt(r.ratio_low),
        opt(r.ratio_high),
        r.verdict.label().to_string(),
    ]
}

/// CSV text from a header and rows.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory CSV");
    for r in rows {
        w.write_record(r).expect("in-memory CSV");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("CSV of UTF-8 fields")
}

pub fn report_csv(report: &Report) -> String {
    let rows: Vec<Vec<String>> = report.records.iter().map(record_row).collect();
    to_csv(&CSV_COLUMNS, &rows)
}

pub fn emit_report(report: &Report, format: Format) -> String {
    match format {
        Format::Json => to_json(report),
        Format::Csv => report_csv(report),
    }
}

/// Writes to `path`, or stdout when there is none.
pub fn write_output(text: &str, path: Option<&Path>) -> Result<(), WriteError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| WriteError {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            use io::Write;
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| WriteError {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}
