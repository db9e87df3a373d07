//! CSV ingestion and report emission.
//!
//! Three input schemas are supported: long-format replicates
//! (`item,value`), wide two-class data (`label,<id>,<id>,...`), and
//! binomial counts (`item,successes,trials`). Parsers stream, cite line
//! numbers in errors, and each format has a writer so files round-trip.
//! Floats are written with 17 significant digits so re-parsing reproduces
//! them bit for bit.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::Serialize;

use crate::bootstrap::ItemDataset;
use crate::error::{Error, Result};

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse { line, message: e.to_string() }
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize, what: &str) -> Result<T> {
    field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("{what} '{field}' is not valid"),
    })
}

fn finite_field(field: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = parse_field(field, line, what)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Parse { line, message: format!("{what} '{field}' is not finite") })
    }
}

fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

/// Parses long-format replicate data with header `item,value`. Repeated
/// item ids accumulate; first-appearance order is kept.
pub fn parse_replicates<R: Read>(reader: R) -> Result<ItemDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.len() != 2 || &headers[0] != "item" || &headers[1] != "value" {
        return Err(Error::Parse {
            line: 1,
            message: "expected header 'item,value'".into(),
        });
    }
    let mut ids: Vec<String> = Vec::new();
    let mut slots: HashMap<String, usize> = HashMap::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record_line(&record);
        let v = finite_field(&record[1], line, "value")?;
        let slot = *slots.entry(record[0].to_string()).or_insert_with(|| {
            ids.push(record[0].to_string());
            values.push(Vec::new());
            ids.len() - 1
        });
        values[slot].push(v);
    }
    if ids.is_empty() {
        return Err(Error::Parse { line: 1, message: "file has no data rows".into() });
    }
    let data = ItemDataset::Replicates { ids, values };
    data.validate()?;
    Ok(data)
}

/// Parses wide two-class data: header `label,<id>,...`, one row per
/// observation, the first column carrying the class label.
pub fn parse_two_class<R: Read>(reader: R) -> Result<ItemDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.len() < 2 || &headers[0] != "label" {
        return Err(Error::Parse {
            line: 1,
            message: "expected header 'label,<item id>,...'".into(),
        });
    }
    let ids: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record_line(&record);
        labels.push(record[0].to_string());
        let mut row = Vec::with_capacity(ids.len());
        for field in record.iter().skip(1) {
            row.push(finite_field(field, line, "value")?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: 1, message: "file has no data rows".into() });
    }
    let data = ItemDataset::TwoClass { ids, labels, rows };
    data.validate()?;
    Ok(data)
}

/// Parses binomial count data with header `item,successes,trials`.
pub fn parse_binomial<R: Read>(reader: R) -> Result<ItemDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.len() != 3
        || &headers[0] != "item"
        || &headers[1] != "successes"
        || &headers[2] != "trials"
    {
        return Err(Error::Parse {
            line: 1,
            message: "expected header 'item,successes,trials'".into(),
        });
    }
    let mut ids = Vec::new();
    let mut successes = Vec::new();
    let mut trials = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record_line(&record);
        let s: u64 = parse_field(&record[1], line, "successes")?;
        let t: u64 = parse_field(&record[2], line, "trials")?;
        if s > t {
            return Err(Error::Parse {
                line,
                message: format!(
                    "item {} has {s} successes but only {t} trials",
                    &record[0]
                ),
            });
        }
        ids.push(record[0].to_string());
        successes.push(s);
        trials.push(t);
    }
    if ids.is_empty() {
        return Err(Error::Parse { line: 1, message: "file has no data rows".into() });
    }
    let data = ItemDataset::Binomial { ids, successes, trials };
    data.validate()?;
    Ok(data)
}

/// Renders a float with 17 significant digits, enough to round-trip f64.
pub fn float_repr(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a dataset back out in the schema `parse_replicates` reads.
pub fn write_replicates<W: Write>(data: &ItemDataset, mut w: W) -> Result<()> {
    let ItemDataset::Replicates { ids, values } = data else {
        return Err(Error::Argument("not a replicate dataset".into()));
    };
    writeln!(w, "item,value")?;
    for (id, vs) in ids.iter().zip(values) {
        for v in vs {
            writeln!(w, "{id},{}", float_repr(*v))?;
        }
    }
    Ok(())
}

/// Writes a dataset back out in the schema `parse_two_class` reads.
pub fn write_two_class<W: Write>(data: &ItemDataset, mut w: W) -> Result<()> {
    let ItemDataset::TwoClass { ids, labels, rows } = data else {
        return Err(Error::Argument("not a two-class dataset".into()));
    };
    writeln!(w, "label,{}", ids.join(","))?;
    for (label, row) in labels.iter().zip(rows) {
        let cells: Vec<String> = row.iter().map(|v| float_repr(*v)).collect();
        writeln!(w, "{label},{}", cells.join(","))?;
    }
    Ok(())
}

/// Writes a dataset back out in the schema `parse_binomial` reads.
pub fn write_binomial<W: Write>(data: &ItemDataset, mut w: W) -> Result<()> {
    let ItemDataset::Binomial { ids, successes, trials } = data else {
        return Err(Error::Argument("not a binomial dataset".into()));
    };
    writeln!(w, "item,successes,trials")?;
    for ((id, s), t) in ids.iter().zip(successes).zip(trials) {
        writeln!(w, "{id},{s},{t}")?;
    }
    Ok(())
}

/// One CSV cell in an emitted table.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Text(String),
    UInt(u64),
    Int(i64),
    Float(f64),
    /// Rendered as an empty field.
    Empty,
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::UInt(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => float_repr(*v),
            Cell::Empty => String::new(),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}
impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::UInt(v)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}
impl From<Option<u64>> for Cell {
    fn from(v: Option<u64>) -> Self {
        v.map_or(Cell::Empty, Cell::UInt)
    }
}

/// A flat table destined for a `.table.csv` or `.plot.csv` file.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: Vec<S>) -> Self {
        Table { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Argument(format!(
                "row has {} cells, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(&self.columns).map_err(csv_error)?;
        for row in &self.rows {
            let rendered: Vec<String> = row.iter().map(Cell::render).collect();
            wtr.write_record(&rendered).map_err(csv_error)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf)
            .map_err(|e| Error::Validation(format!("table is not UTF-8: {e}")))
    }
}

/// Reads any CSV back as header plus string rows, for round-trip checks.
pub fn read_csv_table<R: Read>(reader: R) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok((headers, rows))
}

/// Run metadata emitted with every report. Wall-clock time is optional so
/// that default output stays byte-identical across reruns.
#[derive(Clone, Debug, Serialize)]
pub struct RunMeta {
    pub command: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

/// The primary structured report: metadata plus one payload.
#[derive(Clone, Debug, Serialize)]
pub struct ReportBundle<P: Serialize> {
    pub meta: RunMeta,
    pub payload: P,
}

impl<P: Serialize> ReportBundle<P> {
    pub fn to_pretty_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Validation(format!("report serialization failed: {e}")))?;
        s.push('\n');
        Ok(s)
    }
}
