//! Tabular output with a key=value metadata block.
//!
//! CSV files start with `#key=value` lines followed by one header row. JSON
//! output carries the same content as `{"meta": {...}, "columns": [...],
//! "rows": [[...]]}`. Floats are written in Rust's shortest round-trip form
//! so parsing a written table yields identical values.

use std::io::Write;

use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Missing,
}

impl Cell {
    fn to_field(&self) -> String {
        match self {
            // Debug keeps a trailing ".0" so floats never read back as ints.
            Cell::Float(x) => format!("{x:?}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn from_field(s: &str) -> Cell {
        if s.is_empty() {
            return Cell::Missing;
        }
        if let Ok(i) = s.parse::<i64>() {
            return Cell::Int(i);
        }
        match s.parse::<f64>() {
            Ok(x) => Cell::Float(x),
            Err(_) => Cell::Text(s.to_string()),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Float(x) if x.is_finite() => Value::from(*x),
            // JSON has no literal for these; keep them readable as strings.
            Cell::Float(x) => Value::String(format!("{x:?}")),
            Cell::Int(i) => Value::from(*i),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Missing => Value::Null,
        }
    }

    fn from_json(v: &Value) -> Result<Cell, CliError> {
        Ok(match v {
            Value::Null => Cell::Missing,
            Value::Number(n) => match n.as_i64() {
                Some(i) if !n.is_f64() => Cell::Int(i),
                _ => Cell::Float(n.as_f64().ok_or_else(|| CliError::Parse(format!("bad number {n}")))?),
            },
            Value::String(s) => match s.as_str() {
                "NaN" | "inf" | "-inf" => Cell::Float(s.parse().expect("literal float")),
                _ => Cell::Text(s.clone()),
            },
            other => return Err(CliError::Parse(format!("unexpected cell {other}"))),
        })
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Cell::Int(i)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

/// Metadata values are stored as text; floats use the same round-trip form
/// as table cells.
pub trait MetaValue {
    fn render(&self) -> String;
}

impl MetaValue for f64 {
    fn render(&self) -> String {
        format!("{self:?}")
    }
}

macro_rules! display_meta {
    ($($t:ty),*) => {
        $(impl MetaValue for $t {
            fn render(&self) -> String {
                self.to_string()
            }
        })*
    };
}

display_meta!(&str, String, usize, i64, u64, bool);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { meta: Vec::new(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn meta(&mut self, key: &str, value: impl MetaValue) {
        self.meta.push((key.to_string(), value.render()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn get_meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.to_json())
                    .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
                writeln!(out)?;
                Ok(())
            }
        }
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> Result<(), CliError> {
        for (k, v) in &self.meta {
            writeln!(out, "#{k}={v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_field)).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let meta: Map<String, Value> = self.meta.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::to_json).collect())).collect();
        serde_json::json!({ "meta": meta, "columns": self.columns, "rows": rows })
    }

    pub fn parse(text: &str, format: Format) -> Result<Table, CliError> {
        match format {
            Format::Csv => Table::parse_csv(text),
            Format::Json => {
                let v: Value = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
                Table::from_json(&v)
            }
        }
    }

    pub fn parse_csv(text: &str) -> Result<Table, CliError> {
        let mut meta = Vec::new();
        let mut body = text;
        while let Some(rest) = body.strip_prefix('#') {
            let (line, tail) = rest.split_once('\n').unwrap_or((rest, ""));
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::Parse(format!("bad metadata line #{line}")))?;
            meta.push((k.to_string(), v.to_string()));
            body = tail;
        }
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
        let columns = r.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(csv_error)?.iter().map(Cell::from_field).collect());
        }
        Ok(Table { meta, columns, rows })
    }

    pub fn from_json(v: &Value) -> Result<Table, CliError> {
        let bad = |what: &str| CliError::Parse(format!("JSON table: missing or malformed {what}"));
        let meta = v["meta"]
            .as_object()
            .ok_or_else(|| bad("meta"))?
            .iter()
            .map(|(k, v)| v.as_str().map(|s| (k.clone(), s.to_string())).ok_or_else(|| bad("meta value")))
            .collect::<Result<_, _>>()?;
        let columns = v["columns"]
            .as_array()
            .ok_or_else(|| bad("columns"))?
            .iter()
            .map(|c| c.as_str().map(str::to_string).ok_or_else(|| bad("column name")))
            .collect::<Result<_, _>>()?;
        let rows = v["rows"]
            .as_array()
            .ok_or_else(|| bad("rows"))?
            .iter()
            .map(|r| r.as_array().ok_or_else(|| bad("row"))?.iter().map(Cell::from_json).collect())
            .collect::<Result<_, _>>()?;
        Ok(Table { meta, columns, rows })
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Parse(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&["x", "value", "label", "maybe"]);
        t.meta("gamma", 1.118033988749895);
        t.meta("rng", "ChaCha8Rng");
        t.push(vec![Cell::Int(-3), Cell::Float(0.1 + 0.2), "plus".into(), Cell::Missing]);
        t.push(vec![Cell::Int(0), Cell::Float(1.0), "a,b \"q\"".into(), Cell::Float(-2.5e-300)]);
        t.push(vec![Cell::Int(7), Cell::Float(f64::NAN), "minus".into(), Cell::Float(f64::INFINITY)]);
        t
    }

    // NaN != NaN, so compare through the written form.
    fn same(a: &Table, b: &Table) -> bool {
        format!("{a:?}") == format!("{b:?}")
    }

    #[test]
    fn csv_round_trip() {
        let t = sample();
        let mut buf = Vec::new();
        t.write(Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("#gamma=1.118033988749895\n#rng=ChaCha8Rng\nx,value,label,maybe\n"));
        assert!(same(&Table::parse(&text, Format::Csv).unwrap(), &t));
    }

    #[test]
    fn json_round_trip() {
        let t = sample();
        let mut buf = Vec::new();
        t.write(Format::Json, &mut buf).unwrap();
        let back = Table::parse(std::str::from_utf8(&buf).unwrap(), Format::Json).unwrap();
        assert!(same(&back, &t));
    }

    #[test]
    fn whole_floats_stay_floats() {
        assert_eq!(Cell::Float(2.0).to_field(), "2.0");
        assert_eq!(Cell::from_field("2.0"), Cell::Float(2.0));
        assert_eq!(Cell::from_field("2"), Cell::Int(2));
        assert_eq!(Cell::from_json(&Cell::Float(2.0).to_json()).unwrap(), Cell::Float(2.0));
    }

    #[test]
    fn bad_metadata_is_rejected() {
        assert!(Table::parse_csv("#novalue\na\n1\n").is_err());
    }
}
