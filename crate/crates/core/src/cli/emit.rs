//! CSV and JSON serialization of figure tables.
//!
//! Values are rounded to 12 significant digits and printed in shortest
//! round-trip form, so parsing an emitted file and emitting it again is
//! byte-identical.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::Mode;
use super::figures::{FigureRow, FigureTable};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 6] = ["q", "quantity", "mode", "value", "stderr", "flags"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format {other:?} (csv | json)"))),
        }
    }
}

/// Rounds to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().expect("formatted float parses")
}

fn fmt_value(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    format!("{:?}", round_sig(x, 12))
}

fn parse_value(field: &str, what: &str) -> Result<f64> {
    field.parse().map_err(|_| Error::Config(format!("{what}: not a number: {field:?}")))
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonRow {
    q: f64,
    quantity: String,
    mode: String,
    value: Option<f64>,
    stderr: Option<f64>,
    flags: Vec<String>,
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

/// Renders a table in the requested format.
pub fn render(table: &FigureTable, format: Format) -> Result<String> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            w.write_record(CSV_HEADER).map_err(csv_error)?;
            for r in &table.rows {
                let stderr = r.stderr.map(fmt_value).unwrap_or_default();
                w.write_record([
                    fmt_value(r.q),
                    r.quantity.clone(),
                    r.mode.tag().to_string(),
                    fmt_value(r.value),
                    stderr,
                    r.flags.join(";"),
                ])
                .map_err(csv_error)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        Format::Json => {
            let rows: Vec<JsonRow> = table
                .rows
                .iter()
                .map(|r| JsonRow {
                    q: round_sig(r.q, 12),
                    quantity: r.quantity.clone(),
                    mode: r.mode.tag().to_string(),
                    value: r.value.is_finite().then(|| round_sig(r.value, 12)),
                    stderr: r.stderr.filter(|s| s.is_finite()).map(|s| round_sig(s, 12)),
                    flags: r.flags.clone(),
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&rows).map_err(|e| Error::Io(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

/// Parses CSV produced by [`render`].
pub fn parse_csv(text: &str) -> Result<FigureTable> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_error)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config(format!("csv: unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_error)?;
        let stderr = match &rec[4] {
            "" => None,
            s => Some(parse_value(s, "stderr")?),
        };
        let flags = match &rec[5] {
            "" => Vec::new(),
            s => s.split(';').map(str::to_string).collect(),
        };
        rows.push(FigureRow {
            q: parse_value(&rec[0], "q")?,
            quantity: rec[1].to_string(),
            mode: rec[2].parse::<Mode>()?,
            value: parse_value(&rec[3], "value")?,
            stderr,
            flags,
        });
    }
    Ok(FigureTable::new(rows))
}

/// Writes the rendered table to `path`, or to stdout when `path` is `None`.
pub fn emit(table: &FigureTable, format: Format, path: Option<&Path>) -> Result<()> {
    let text = render(table, format)?;
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
