// SPDX-License-Identifier: Apache-2.0

//! Streaming CSV and JSON writers for fetched dataset items.

use std::io::Write;
use std::path::Path;

use serde_json::Value;

use arbohub_core::datastore::DatasetKind;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// From the file extension; anything but `.json` is CSV.
    pub fn for_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// CSV header for `kind`, in the same column order ingestion reads.
pub fn columns(kind: DatasetKind) -> Vec<&'static str> {
    let mut cols = kind.columns().to_vec();
    if kind == DatasetKind::Infodengue {
        cols.push("disease");
    }
    cols
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    }
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(format!("writing output: {e}"))
}

pub enum ItemWriter<W: Write> {
    Csv {
        out: csv::Writer<W>,
        columns: Vec<&'static str>,
    },
    Json {
        out: W,
        first: bool,
    },
}

impl<W: Write> ItemWriter<W> {
    /// Starts the output; a CSV header is written even if no item follows.
    pub fn begin(format: Format, kind: DatasetKind, out: W) -> Result<Self, CliError> {
        match format {
            Format::Csv => {
                let columns = columns(kind);
                let mut out = csv::Writer::from_writer(out);
                out.write_record(&columns).map_err(io_err)?;
                Ok(Self::Csv { out, columns })
            }
            Format::Json => {
                let mut out = out;
                out.write_all(b"[").map_err(io_err)?;
                Ok(Self::Json { out, first: true })
            }
        }
    }

    pub fn push(&mut self, item: &Value) -> Result<(), CliError> {
        match self {
            Self::Csv { out, columns } => {
                let row: Vec<String> = columns.iter().map(|c| cell(item.get(*c))).collect();
                out.write_record(&row).map_err(io_err)
            }
            Self::Json { out, first } => {
                if !*first {
                    out.write_all(b",").map_err(io_err)?;
                }
                *first = false;
                out.write_all(b"\n").map_err(io_err)?;
                serde_json::to_writer(&mut *out, item).map_err(io_err)
            }
        }
    }

    pub fn finish(self) -> Result<W, CliError> {
        match self {
            Self::Csv { out, .. } => out.into_inner().map_err(|e| io_err(e.error())),
            Self::Json { mut out, first } => {
                out.write_all(if first { b"]\n" } else { b"\n]\n" }).map_err(io_err)?;
                out.flush().map_err(io_err)?;
                Ok(out)
            }
        }
    }
}
