// SPDX-License-Identifier: Apache-2.0

//! Prediction row files and the upload document built from them.

use std::path::Path;

use serde_json::{Map, Number, Value};

use arbohub_core::domain::{
    validate_prediction, validate_rows, ImplementationLanguage, TimeResolution, ROW_COLUMNS,
};
use arbohub_core::{
    AdmLevel, Disease, ModelMeta, ModelRecord, PredictionRow, ValidationErrors, ValidationPolicy,
};

use crate::error::CliError;

const REQUIRED: [&str; 4] = ["date", "pred", "lower", "upper"];
const NUMERIC: [&str; 3] = ["pred", "lower", "upper"];

/// Raw rows read from a file, plus the prediction id when the file is a
/// stored prediction downloaded from the hub.
#[derive(Debug, Clone, PartialEq)]
pub struct RowsFile {
    pub rows: Vec<Value>,
    pub id: Option<u64>,
}

/// Reads a JSON array of row objects, a JSON prediction document with a
/// `prediction` array, or a CSV with row column headers.
pub fn read_rows(path: &Path) -> Result<RowsFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let looks_json = matches!(text.trim_start().chars().next(), Some('[' | '{'));
    let parsed = match ext.as_deref() {
        Some("json") => rows_from_json(&text),
        Some("csv") => rows_from_csv(&text),
        _ if looks_json => rows_from_json(&text),
        _ => rows_from_csv(&text),
    };
    parsed.map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

pub fn rows_from_json(text: &str) -> Result<RowsFile, String> {
    let doc: Value = serde_json::from_str(text).map_err(|e| format!("not JSON: {e}"))?;
    match doc {
        Value::Array(rows) => Ok(RowsFile { rows, id: None }),
        Value::Object(mut obj) => {
            let id = obj.get("id").and_then(Value::as_u64);
            match obj.remove("prediction") {
                Some(Value::Array(rows)) => Ok(RowsFile { rows, id }),
                Some(Value::String(s)) => match serde_json::from_str(&s) {
                    Ok(Value::Array(rows)) => Ok(RowsFile { rows, id }),
                    _ => Err("\"prediction\" string must hold a JSON array of rows".into()),
                },
                _ => Err("expected an array of rows or an object with a \"prediction\" array".into()),
            }
        }
        _ => Err("expected an array of rows or an object with a \"prediction\" array".into()),
    }
}

/// CSV rows as JSON objects. Empty cells are left out, numeric columns become
/// numbers when they parse, everything else stays a string for the domain
/// rules to judge.
pub fn rows_from_csv(text: &str) -> Result<RowsFile, String> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| format!("unreadable header: {e}"))?
        .iter()
        .map(str::to_string)
        .collect();
    for (i, h) in headers.iter().enumerate() {
        if !ROW_COLUMNS.contains(&h.as_str()) {
            return Err(format!("unknown column {h:?}; expected {}", ROW_COLUMNS.join(", ")));
        }
        if headers[..i].contains(h) {
            return Err(format!("column {h:?} appears twice"));
        }
    }
    let missing: Vec<&str> = REQUIRED
        .into_iter()
        .filter(|c| !headers.iter().any(|h| h == c))
        .collect();
    if !missing.is_empty() {
        return Err(format!("missing column(s) {}", missing.join(", ")));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        let mut obj = Map::new();
        for (h, cell) in headers.iter().zip(record.iter()) {
            if cell.is_empty() {
                continue;
            }
            let value = if NUMERIC.contains(&h.as_str()) {
                cell.parse::<f64>()
                    .ok()
                    .and_then(Number::from_f64)
                    .map_or_else(|| Value::String(cell.into()), Value::Number)
            } else {
                Value::String(cell.into())
            };
            obj.insert(h.clone(), value);
        }
        rows.push(Value::Object(obj));
    }
    Ok(RowsFile { rows, id: None })
}

/// Deepest ADM level whose column is filled on every row.
pub fn infer_level(rows: &[Value]) -> AdmLevel {
    let filled = |level: AdmLevel| {
        rows.iter().all(|r| {
            r.get(level.column()).is_some_and(|v| !v.is_null())
        })
    };
    AdmLevel::ALL
        .into_iter()
        .rev()
        .find(|&l| filled(l))
        .unwrap_or(AdmLevel::National)
}

fn candidate_levels(rows: &[Value]) -> Vec<AdmLevel> {
    let first = infer_level(rows);
    std::iter::once(first)
        .chain(AdmLevel::ALL.into_iter().filter(|&l| l != first))
        .collect()
}

fn stand_in(model: u64, adm_level: AdmLevel) -> ModelRecord {
    ModelRecord {
        id: model,
        owner: 0,
        meta: ModelMeta {
            name: "local".into(),
            description: String::new(),
            repository: String::new(),
            implementation_language: ImplementationLanguage::Python,
            disease: Disease::Dengue,
            temporal: false,
            spatial: false,
            categorical: false,
            adm_level,
            time_resolution: TimeResolution::Week,
            sprint: false,
        },
    }
}

/// Checks that need no model: passes when some ADM level would accept the
/// document. Errors come from the level the rows most plausibly target.
pub fn precheck(doc: &Value, policy: &ValidationPolicy) -> Result<(), ValidationErrors> {
    let model = doc.get("model").and_then(Value::as_u64).unwrap_or(1);
    let rows = doc
        .get("prediction")
        .and_then(Value::as_array)
        .map(Vec::as_slice)
        .unwrap_or_default();
    let mut first_err = None;
    for level in candidate_levels(rows) {
        match validate_prediction(doc, &stand_in(model, level), policy) {
            Ok(_) => return Ok(()),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    Err(first_err.expect("at least one level"))
}

/// Parses bare rows for scoring at `level`, or at the inferred level.
pub fn parse_rows(
    rows: &[Value],
    level: Option<AdmLevel>,
    policy: &ValidationPolicy,
) -> Result<(AdmLevel, Vec<PredictionRow>), ValidationErrors> {
    let level = level.unwrap_or_else(|| infer_level(rows));
    validate_rows(rows, level, policy).map(|r| (level, r))
}

/// The body of a prediction upload.
pub fn upload_document(
    model: u64,
    commit: &str,
    predict_date: &str,
    description: Option<&str>,
    rows: Vec<Value>,
) -> Value {
    let mut doc = Map::new();
    doc.insert("model".into(), Value::from(model));
    if let Some(d) = description {
        doc.insert("description".into(), Value::from(d));
    }
    doc.insert("commit".into(), Value::from(commit));
    doc.insert("predict_date".into(), Value::from(predict_date));
    doc.insert("prediction".into(), Value::Array(rows));
    Value::Object(doc)
}
