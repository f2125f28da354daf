use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Field, OhlcvBar, PricePanel};
use crate::error::{Error, Result};

/// Maps panel fields to CSV header names. Defaults follow the Yahoo! Finance
/// export: `Date,Open,High,Low,Close,Adj Close,Volume`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnSchema {
    pub date: String,
    pub open: String,
    pub high: String,
    pub low: String,
    pub close: String,
    pub adj_close: String,
    pub volume: String,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        Self {
            date: "Date".into(),
            open: "Open".into(),
            high: "High".into(),
            low: "Low".into(),
            close: "Close".into(),
            adj_close: "Adj Close".into(),
            volume: "Volume".into(),
        }
    }
}

impl ColumnSchema {
    fn name(&self, field: Field) -> &str {
        match field {
            Field::Open => &self.open,
            Field::High => &self.high,
            Field::Low => &self.low,
            Field::Close => &self.close,
            Field::AdjClose => &self.adj_close,
            Field::Volume => &self.volume,
        }
    }
}

/// Loads one ticker's CSV; the ticker symbol is the file stem.
pub fn load_csv(path: &Path, schema: &ColumnSchema) -> Result<PricePanel> {
    let ticker = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::param(format!("cannot derive ticker from {}", path.display())))?
        .to_string();
    let file = File::open(path)?;
    read_csv(file, &ticker, schema).map_err(|e| attach_path(e, path))
}

fn attach_path(err: Error, path: &Path) -> Error {
    match err {
        Error::MissingColumn { column, .. } => Error::MissingColumn {
            column,
            path: Some(path.to_path_buf()),
        },
        Error::Row { line, message, .. } => Error::Row {
            line,
            message,
            path: Some(path.to_path_buf()),
        },
        other => other,
    }
}

pub fn read_csv<R: Read>(reader: R, ticker: &str, schema: &ColumnSchema) -> Result<PricePanel> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                column: name.to_string(),
                path: None,
            })
    };
    let date_col = find(&schema.date)?;
    let mut cols = [0usize; 6];
    for f in Field::ALL {
        cols[f.index()] = find(schema.name(f))?;
    }

    let mut bars = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let line = rdr.position().line();
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(csv_error(e, line)),
        }
        let line = record.position().map_or(line, |p| p.line());
        let row_err = |message: String| Error::Row {
            line,
            message,
            path: None,
        };
        let date = parse_date(&record[date_col]).ok_or_else(|| row_err(format!("bad date {:?}", &record[date_col])))?;
        let mut v = [f64::NAN; 6];
        for f in Field::ALL {
            let raw = &record[cols[f.index()]];
            v[f.index()] = parse_value(raw).ok_or_else(|| row_err(format!("bad {} value {raw:?}", f.name())))?;
        }
        let bar = OhlcvBar {
            date,
            open: v[0],
            high: v[1],
            low: v[2],
            close: v[3],
            adj_close: v[4],
            volume: v[5],
        };
        bar.check().map_err(row_err)?;
        bars.push(bar);
    }
    PricePanel::from_bars(ticker, bars)
}

fn csv_error(err: csv::Error, fallback_line: u64) -> Error {
    let line = err.position().map_or(fallback_line, |p| p.line());
    Error::Row {
        line,
        message: match err.kind() {
            csv::ErrorKind::UnequalLengths {
                expected_len, len, ..
            } => format!("expected {expected_len} fields, found {len}"),
            _ => err.to_string(),
        },
        path: None,
    }
}

/// Accepts `YYYY-MM-DD` and ISO-8601 timestamps (date part is used).
fn parse_date(raw: &str) -> Option<NaiveDate> {
    let head = raw.get(..10)?;
    if raw.len() > 10 && !matches!(raw.as_bytes()[10], b'T' | b' ') {
        return None;
    }
    NaiveDate::parse_from_str(head, "%Y-%m-%d").ok()
}

fn parse_value(raw: &str) -> Option<f64> {
    if raw.is_empty() || raw.eq_ignore_ascii_case("null") || raw.eq_ignore_ascii_case("nan") {
        return Some(f64::NAN);
    }
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Writes one ticker of `panel` with the given schema. Missing values are
/// written as empty fields; reals use the shortest round-tripping decimal.
pub fn write_csv<W: Write>(panel: &PricePanel, ticker: usize, schema: &ColumnSchema, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![schema.date.as_str()];
    header.extend(Field::ALL.iter().map(|f| schema.name(*f)));
    w.write_record(&header).map_err(csv_write)?;
    for t in 0..panel.n_dates() {
        let mut row = vec![panel.dates()[t].format("%Y-%m-%d").to_string()];
        for f in Field::ALL {
            let v = panel.series(ticker, f)[t];
            row.push(if v.is_nan() { String::new() } else { v.to_string() });
        }
        w.write_record(&row).map_err(csv_write)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_write(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
