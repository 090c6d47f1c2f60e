//! Typed loading of the four raw relations.
//!
//! Files are delimited text with a header (`.csv`) or JSON lines (`.jsonl`,
//! `.ndjson`). Malformed rows never abort a load: they are collected into the
//! table's reject list together with a human-readable reason. Only structural
//! problems (missing file, wrong header, duplicate product ids) are fatal.

mod records;
mod refs;
mod snapshot;

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

pub use records::{ClickRecord, OfferRecord, ProductRecord, RetailerRecord};
pub use refs::{check_references, RefCheck};
pub use snapshot::{retailer_snapshot, RetailerSnapshot};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{}: file not found", .0.display())]
    MissingFile(PathBuf),
    #[error("{path}: expected header `{expected}`, found `{found}`")]
    HeaderMismatch {
        path: String,
        expected: String,
        found: String,
    },
    #[error("{}: unsupported file extension (expected .csv or .jsonl)", .0.display())]
    UnsupportedFormat(PathBuf),
    #[error("duplicate prod_id {0:?} in products table")]
    DuplicateProduct(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
}

/// Which base relation a file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Products,
    Offers,
    Clicks,
    Retailers,
}

impl TableKind {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            TableKind::Products => &["prod_id", "name", "born_ts"],
            TableKind::Offers => &["offer_id", "prod_id", "ret_id", "ts", "price"],
            TableKind::Clicks => &["prod_id", "ret_id", "ts", "clicks"],
            TableKind::Retailers => &["ret_id", "ret_name", "ts"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TableKind::Products => "products",
            TableKind::Offers => "offers",
            TableKind::Clicks => "clicks",
            TableKind::Retailers => "retailers",
        }
    }
}

/// A row routed away from its table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reject {
    pub table: TableKind,
    /// 1-based line number in the source file (the header is line 1 for CSV).
    pub line: u64,
    pub reason: String,
}

/// A record type that can be parsed from one row of its base relation.
pub trait TableRecord: Sized + Serialize {
    const KIND: TableKind;

    /// Parse one row whose fields are aligned with `KIND.columns()`.
    fn from_fields(fields: &[&str]) -> Result<Self, String>;

    /// Table-level validation run after all rows are parsed.
    fn check_table(_rows: &[Self]) -> Result<(), IngestError> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table<R> {
    pub rows: Vec<R>,
    pub rejects: Vec<Reject>,
    /// Number of data rows read, accepted or not.
    pub data_rows: usize,
}

impl<R> Table<R> {
    pub fn from_rows(rows: Vec<R>) -> Self {
        let data_rows = rows.len();
        Table {
            rows,
            rejects: Vec::new(),
            data_rows,
        }
    }
}

enum Format {
    Csv,
    JsonLines,
}

fn format_of(path: &Path) -> Result<Format, IngestError> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("csv") => Ok(Format::Csv),
        Some("jsonl") | Some("ndjson") => Ok(Format::JsonLines),
        _ => Err(IngestError::UnsupportedFormat(path.to_path_buf())),
    }
}

/// Load one base relation from `path`.
pub fn load_table<R: TableRecord>(path: &Path) -> Result<Table<R>, IngestError> {
    if !path.exists() {
        return Err(IngestError::MissingFile(path.to_path_buf()));
    }
    let table = match format_of(path)? {
        Format::Csv => load_csv::<R>(path)?,
        Format::JsonLines => load_jsonl::<R>(path)?,
    };
    R::check_table(&table.rows)?;
    Ok(table)
}

fn load_csv<R: TableRecord>(path: &Path) -> Result<Table<R>, IngestError> {
    let io_err = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(true)
        .from_reader(file);
    let csv_err = |source| IngestError::Csv {
        path: path.to_path_buf(),
        source,
    };

    let expected = R::KIND.columns();
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().ne(expected.iter().copied()) {
        return Err(IngestError::HeaderMismatch {
            path: path.display().to_string(),
            expected: expected.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut table = Table {
        rows: Vec::new(),
        rejects: Vec::new(),
        data_rows: 0,
    };
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                // Invalid UTF-8 and similar row-level faults.
                let line = e.position().map_or(0, |p| p.line());
                if e.is_io_error() {
                    return Err(csv_err(e));
                }
                table.data_rows += 1;
                table.rejects.push(Reject {
                    table: R::KIND,
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        }
        table.data_rows += 1;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != expected.len() {
            table.rejects.push(Reject {
                table: R::KIND,
                line,
                reason: format!("expected {} fields, found {}", expected.len(), record.len()),
            });
            continue;
        }
        let fields: Vec<&str> = record.iter().collect();
        match R::from_fields(&fields) {
            Ok(row) => table.rows.push(row),
            Err(reason) => table.rejects.push(Reject {
                table: R::KIND,
                line,
                reason,
            }),
        }
    }
    Ok(table)
}

fn load_jsonl<R: TableRecord>(path: &Path) -> Result<Table<R>, IngestError> {
    let io_err = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let expected = R::KIND.columns();
    let mut table = Table {
        rows: Vec::new(),
        rejects: Vec::new(),
        data_rows: 0,
    };

    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        table.data_rows += 1;
        let line_no = idx as u64 + 1;
        let parsed = serde_json::from_str::<serde_json::Map<String, serde_json::Value>>(&line)
            .map_err(|e| format!("invalid JSON object: {e}"))
            .and_then(|obj| {
                expected
                    .iter()
                    .map(|col| match obj.get(*col) {
                        Some(serde_json::Value::String(s)) => Ok(s.clone()),
                        Some(serde_json::Value::Number(n)) => Ok(n.to_string()),
                        Some(other) => Err(format!("field {col}: unsupported value {other}")),
                        None => Err(format!("missing field {col}")),
                    })
                    .collect::<Result<Vec<String>, String>>()
            });
        let result = parsed.and_then(|values| {
            let fields: Vec<&str> = values.iter().map(String::as_str).collect();
            R::from_fields(&fields)
        });
        match result {
            Ok(row) => table.rows.push(row),
            Err(reason) => table.rejects.push(Reject {
                table: R::KIND,
                line: line_no,
                reason,
            }),
        }
    }
    Ok(table)
}

/// Write records as CSV with the canonical header for their relation.
pub fn write_table<R: TableRecord, W: Write>(writer: W, rows: &[R]) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    w.write_record(R::KIND.columns())?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Write the combined reject report (`table,line,reason`).
pub fn write_rejects<W: Write>(writer: W, rejects: &[Reject]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["table", "line", "reason"])?;
    for r in rejects {
        w.write_record([r.table.name(), &r.line.to_string(), &r.reason])?;
    }
    w.flush()?;
    Ok(())
}
