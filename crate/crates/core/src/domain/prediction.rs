// SPDX-License-Identifier: Apache-2.0

//! Prediction uploads: metadata plus interval forecast rows.

use std::collections::HashMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::calendar::parse_wire_date;
use super::errors::{Collector, FieldError, ValidationErrors};
use super::geo::{AdmKey, AdmLevel, Geocode, Uf};
use super::model::{ModelRecord, TimeResolution};
use super::ValidationPolicy;

/// One forecast value with its interval and spatial unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
pub struct PredictionRow {
    pub date: NaiveDate,
    pub pred: f64,
    pub lower: f64,
    pub upper: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adm_0: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adm_1: Option<Uf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adm_2: Option<Geocode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adm_3: Option<u64>,
}

impl PredictionRow {
    /// The row's spatial key at `level`, when that column is filled.
    pub fn adm_key(&self, level: AdmLevel) -> Option<AdmKey> {
        match level {
            AdmLevel::National => self.adm_0.clone().map(AdmKey::Country),
            AdmLevel::State => self.adm_1.map(AdmKey::State),
            AdmLevel::Municipality => self.adm_2.map(AdmKey::Municipality),
            AdmLevel::SubMunicipality => self.adm_3.map(AdmKey::SubMunicipality),
        }
    }
}

/// A validated upload, before the server assigns it an id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
pub struct Prediction {
    pub model: u64,
    #[serde(default)]
    pub description: String,
    pub commit: String,
    pub predict_date: NaiveDate,
    #[serde(rename = "prediction")]
    pub rows: Vec<PredictionRow>,
}

impl Prediction {
    /// First and last row date.
    pub fn date_span(&self) -> Option<(NaiveDate, NaiveDate)> {
        let min = self.rows.iter().map(|r| r.date).min()?;
        let max = self.rows.iter().map(|r| r.date).max()?;
        Some((min, max))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
pub struct PredictionRecord {
    pub id: u64,
    #[serde(flatten)]
    pub prediction: Prediction,
}

/// Columns a prediction row may carry.
pub const ROW_COLUMNS: [&str; 8] = [
    "date", "pred", "lower", "upper", "adm_0", "adm_1", "adm_2", "adm_3",
];

const PREDICTION_FIELDS: [&str; 5] = ["model", "description", "commit", "predict_date", "prediction"];

pub fn is_commit_hash(s: &str) -> bool {
    s.len() == 40 && s.bytes().all(|b| b.is_ascii_hexdigit())
}

fn present(v: Option<&Value>) -> Option<&Value> {
    v.filter(|v| !v.is_null())
}

fn integer_like(v: &Value) -> Option<u64> {
    match v {
        Value::Number(n) => n.as_u64(),
        Value::String(s) if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) => s.parse().ok(),
        _ => None,
    }
}

fn parse_row(idx: usize, raw: &Value, c: &mut Collector) -> Option<PredictionRow> {
    let Some(obj) = raw.as_object() else {
        c.push(FieldError::in_row(idx, "prediction", "row must be a JSON object"));
        return None;
    };
    let before = c.len();

    for key in obj.keys() {
        if !ROW_COLUMNS.contains(&key.as_str()) {
            c.push(FieldError::in_row(idx, key.as_str(), "unknown column"));
        }
    }

    let date = match present(obj.get("date")) {
        None => {
            c.push(FieldError::in_row(idx, "date", "required, must not be null"));
            None
        }
        Some(Value::String(s)) => c.take(
            parse_wire_date(s).map_err(|e| FieldError::in_row(idx, "date", e.to_string())),
        ),
        Some(_) => {
            c.push(FieldError::in_row(idx, "date", "must be a YYYY-mm-dd string"));
            None
        }
    };

    let mut number = |field: &str| -> Option<f64> {
        match present(obj.get(field)) {
            None => {
                c.push(FieldError::in_row(idx, field, "required, must not be null"));
                None
            }
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => Some(x),
                _ => {
                    c.push(FieldError::in_row(idx, field, "must be a finite number"));
                    None
                }
            },
        }
    };
    let pred = number("pred");
    let lower = number("lower");
    let upper = number("upper");

    if let (Some(p), Some(l), Some(u)) = (pred, lower, upper) {
        if l > u {
            c.push(FieldError::in_row(idx, "lower", format!("lower {l} exceeds upper {u}")));
        } else if p < l {
            c.push(FieldError::in_row(idx, "pred", format!("pred {p} is below lower {l}")));
        } else if p > u {
            c.push(FieldError::in_row(idx, "pred", format!("pred {p} is above upper {u}")));
        }
    }

    let adm_0 = present(obj.get("adm_0")).and_then(|v| {
        let parsed = v
            .as_str()
            .ok_or_else(|| "must be a country code string".to_string())
            .and_then(|s| AdmKey::parse(AdmLevel::National, s));
        match parsed {
            Ok(AdmKey::Country(code)) => Some(code),
            Ok(_) => unreachable!(),
            Err(e) => {
                c.push(FieldError::in_row(idx, "adm_0", e));
                None
            }
        }
    });
    let adm_1 = present(obj.get("adm_1")).and_then(|v| {
        let uf = match v {
            Value::String(s) => Uf::parse(s),
            Value::Number(n) => n.as_u64().and_then(|n| u8::try_from(n).ok()).and_then(Uf::from_code),
            _ => None,
        };
        if uf.is_none() {
            c.push(FieldError::in_row(
                idx,
                "adm_1",
                format!("must be a state geocode or UF, got {v}"),
            ));
        }
        uf
    });
    let adm_2 = present(obj.get("adm_2")).and_then(|v| {
        let g = integer_like(v).and_then(Geocode::new);
        if g.is_none() {
            c.push(FieldError::in_row(
                idx,
                "adm_2",
                format!("must be a 7-digit municipality geocode, got {v}"),
            ));
        }
        g
    });
    let adm_3 = present(obj.get("adm_3")).and_then(|v| {
        let n = integer_like(v).filter(|&n| n > 0);
        if n.is_none() {
            c.push(FieldError::in_row(idx, "adm_3", format!("must be a positive integer geocode, got {v}")));
        }
        n
    });

    if c.len() > before {
        return None;
    }
    Some(PredictionRow {
        date: date?,
        pred: pred?,
        lower: lower?,
        upper: upper?,
        adm_0,
        adm_1,
        adm_2,
        adm_3,
    })
}

fn check_rows(
    raw_rows: &[Value],
    level: AdmLevel,
    policy: &ValidationPolicy,
    c: &mut Collector,
) -> Vec<PredictionRow> {
    let mut rows = Vec::new();
    if raw_rows.is_empty() {
        c.push(FieldError::new("prediction", "must contain at least one row"));
        return rows;
    }
    if raw_rows.len() > policy.max_prediction_rows {
        c.push(FieldError::new(
            "prediction",
            format!(
                "{} rows exceed the limit of {}",
                raw_rows.len(),
                policy.max_prediction_rows
            ),
        ));
        return rows;
    }
    let column = level.column();
    let mut seen: HashMap<(NaiveDate, AdmKey), usize> = HashMap::new();
    for (idx, raw) in raw_rows.iter().enumerate() {
        let level_missing = raw
            .as_object()
            .is_some_and(|o| present(o.get(column)).is_none());
        if level_missing {
            c.push(FieldError::in_row(
                idx,
                column,
                format!("{column} required for adm_level {level} models"),
            ));
        }
        let Some(row) = parse_row(idx, raw, c) else {
            continue;
        };
        if let Some(key) = row.adm_key(level) {
            if let Some(first) = seen.insert((row.date, key.clone()), idx) {
                c.push(FieldError::in_row(
                    idx,
                    "date",
                    format!("duplicates row {first} for ({}, {key})", row.date),
                ));
            }
        }
        rows.push(row);
    }
    rows
}

/// Checks bare prediction rows for a model at `level`, with the same rules
/// and row indices as [`validate_prediction`].
pub fn validate_rows(
    raw_rows: &[Value],
    level: AdmLevel,
    policy: &ValidationPolicy,
) -> Result<Vec<PredictionRow>, ValidationErrors> {
    let mut c = Collector::default();
    let rows = check_rows(raw_rows, level, policy, &mut c);
    c.finish(|| rows)
}

/// Validates a raw upload against the model it claims to belong to.
///
/// Every row must carry the `adm_N` column of the model's ADM level, and
/// `(date, adm_N)` must be unique across rows.
pub fn validate_prediction(
    candidate: &Value,
    model: &ModelRecord,
    policy: &ValidationPolicy,
) -> Result<Prediction, ValidationErrors> {
    let Some(doc) = candidate.as_object() else {
        return Err(ValidationErrors::single(FieldError::new(
            "body",
            "must be a JSON object",
        )));
    };
    let mut c = Collector::default();
    for key in doc.keys() {
        if !PREDICTION_FIELDS.contains(&key.as_str()) {
            c.push(FieldError::new(key.as_str(), "unknown field"));
        }
    }

    let model_id = match present(doc.get("model")) {
        None => {
            c.push(FieldError::new("model", "required field is missing"));
            None
        }
        Some(v) => match v.as_u64().filter(|&n| n > 0) {
            Some(id) if id == model.id => Some(id),
            Some(id) => {
                c.push(FieldError::new(
                    "model",
                    format!("refers to model {id}, validated against model {}", model.id),
                ));
                None
            }
            None => {
                c.push(FieldError::new("model", "must be a positive integer"));
                None
            }
        },
    };
    let description = match present(doc.get("description")) {
        None => Some(String::new()),
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            c.push(FieldError::new("description", "must be a string"));
            None
        }
    };
    let commit = match present(doc.get("commit")) {
        Some(Value::String(s)) if is_commit_hash(s) => Some(s.clone()),
        Some(v) => {
            c.push(FieldError::new(
                "commit",
                format!("must be a 40-character hexadecimal git hash, got {v}"),
            ));
            None
        }
        None => {
            c.push(FieldError::new("commit", "required field is missing"));
            None
        }
    };
    let predict_date = match present(doc.get("predict_date")) {
        Some(Value::String(s)) => c.take(
            parse_wire_date(s).map_err(|e| FieldError::new("predict_date", e.to_string())),
        ),
        Some(_) => {
            c.push(FieldError::new("predict_date", "must be a YYYY-mm-dd string"));
            None
        }
        None => {
            c.push(FieldError::new("predict_date", "required field is missing"));
            None
        }
    };

    let raw_rows = match present(doc.get("prediction")) {
        Some(Value::Array(rows)) => Some(rows.clone()),
        // A JSON-encoded string holding the array is accepted too.
        Some(Value::String(s)) => match serde_json::from_str::<Value>(s) {
            Ok(Value::Array(rows)) => Some(rows),
            _ => {
                c.push(FieldError::new("prediction", "string must hold a JSON array of rows"));
                None
            }
        },
        Some(_) => {
            c.push(FieldError::new("prediction", "must be an array of row objects"));
            None
        }
        None => {
            c.push(FieldError::new("prediction", "required field is missing"));
            None
        }
    };

    let rows = match raw_rows {
        Some(raw_rows) => check_rows(&raw_rows, model.meta.adm_level, policy, &mut c),
        None => Vec::new(),
    };

    c.finish(|| Prediction {
        model: model_id.unwrap(),
        description: description.unwrap(),
        commit: commit.unwrap(),
        predict_date: predict_date.unwrap(),
        rows,
    })
}

/// Non-fatal notes on row spacing for weekly models: consecutive dates of the
/// same spatial unit should be 7 days apart.
pub fn spacing_warnings(prediction: &Prediction, model: &ModelRecord) -> Vec<String> {
    if model.meta.time_resolution != TimeResolution::Week {
        return Vec::new();
    }
    let level = model.meta.adm_level;
    let mut by_unit: HashMap<Option<AdmKey>, Vec<NaiveDate>> = HashMap::new();
    for row in &prediction.rows {
        by_unit.entry(row.adm_key(level)).or_default().push(row.date);
    }
    let mut units: Vec<_> = by_unit.into_iter().collect();
    units.sort();
    let mut out = Vec::new();
    for (unit, mut dates) in units {
        dates.sort();
        for pair in dates.windows(2) {
            let gap = (pair[1] - pair[0]).num_days();
            if gap != 7 {
                let unit = unit.as_ref().map(ToString::to_string).unwrap_or_default();
                out.push(format!(
                    "{unit}: {} and {} are {gap} days apart, expected 7",
                    pair[0], pair[1]
                ));
            }
        }
    }
    out
}

/// Raw-document view of an already validated prediction.
pub fn to_document(prediction: &Prediction) -> Value {
    serde_json::to_value(prediction).expect("prediction serializes")
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;
    use crate::domain::model::{validate_model_meta, ModelRecord};

    fn model(adm_level: u8) -> ModelRecord {
        let meta = validate_model_meta(
            &json!({
                "name": "m", "disease": "dengue", "adm_level": adm_level,
                "time_resolution": "week", "temporal": true, "spatial": false,
                "categorical": false, "repository": "https://github.com/x/y",
                "implementation_language": "Python", "sprint": false
            }),
            &ValidationPolicy::default(),
        )
        .unwrap();
        ModelRecord { id: 7, owner: 1, meta }
    }

    fn doc(rows: Value) -> Value {
        json!({
            "model": 7, "description": "d", "commit": "a".repeat(40),
            "predict_date": "2023-01-01", "prediction": rows
        })
    }

    fn weekly_mg() -> Value {
        json!([
            {"date": "2023-01-01", "pred": 5.0, "lower": 1.0, "upper": 9.0, "adm_1": "MG"},
            {"date": "2023-01-08", "pred": 6.0, "lower": 2.0, "upper": 10.0, "adm_1": "MG"},
            {"date": "2023-01-15", "pred": 7, "lower": 3, "upper": 11, "adm_1": 31}
        ])
    }

    fn check(v: &Value, m: &ModelRecord) -> Result<Prediction, ValidationErrors> {
        validate_prediction(v, m, &ValidationPolicy::default())
    }

    #[test]
    fn state_model_accepts_adm1_rows() {
        let p = check(&doc(weekly_mg()), &model(1)).unwrap();
        assert_eq!(p.rows.len(), 3);
        assert!(p.rows.iter().all(|r| r.adm_1.unwrap().abbrev() == "MG"));
        assert!(spacing_warnings(&p, &model(1)).is_empty());
    }

    #[test]
    fn state_model_rejects_rows_without_adm1() {
        let rows = json!([
            {"date": "2023-01-01", "pred": 5.0, "lower": 1.0, "upper": 9.0, "adm_2": 3106200},
            {"date": "2023-01-08", "pred": 5.0, "lower": 1.0, "upper": 9.0, "adm_2": 3106200}
        ]);
        let err = check(&doc(rows), &model(1)).unwrap_err();
        assert_eq!(err.errors().len(), 2);
        assert!(err.errors().iter().all(|e| e.field == "adm_1"));
        assert_eq!(err.errors()[1].row, Some(1));
        assert!(err.errors()[0].reason.contains("adm_1 required"));
    }

    #[test]
    fn interval_ordering_is_row_indexed() {
        let rows = json!([
            {"date": "2023-01-01", "pred": 5.0, "lower": 1.0, "upper": 9.0, "adm_1": "MG"},
            {"date": "2023-01-08", "pred": 5.0, "lower": 10.0, "upper": 20.0, "adm_1": "MG"},
            {"date": "2023-01-15", "pred": 25.0, "lower": 10.0, "upper": 20.0, "adm_1": "MG"}
        ]);
        let err = check(&doc(rows), &model(1)).unwrap_err();
        let rows: Vec<_> = err.errors().iter().map(|e| (e.row, e.field.as_str())).collect();
        assert_eq!(rows, vec![(Some(1), "pred"), (Some(2), "pred")]);
    }

    #[test]
    fn nulls_and_bad_commit_are_all_reported() {
        let mut v = doc(json!([
            {"date": null, "pred": null, "lower": 1.0, "upper": 9.0, "adm_1": "MG"}
        ]));
        v["commit"] = json!("abc");
        let err = check(&v, &model(1)).unwrap_err();
        for f in ["commit", "date", "pred"] {
            assert!(err.mentions(f), "{f}: {err}");
        }
    }

    #[test]
    fn duplicate_date_and_unit_rejected() {
        let rows = json!([
            {"date": "2023-01-01", "pred": 5.0, "lower": 1.0, "upper": 9.0, "adm_1": "MG"},
            {"date": "2023-01-01", "pred": 5.0, "lower": 1.0, "upper": 9.0, "adm_1": "SP"},
            {"date": "2023-01-01", "pred": 5.0, "lower": 1.0, "upper": 9.0, "adm_1": "31"}
        ]);
        let err = check(&doc(rows), &model(1)).unwrap_err();
        assert_eq!(err.errors().len(), 1);
        assert_eq!(err.errors()[0].row, Some(2));
    }

    #[test]
    fn municipal_model_needs_valid_geocode() {
        let rows = json!([
            {"date": "2023-01-01", "pred": 5.0, "lower": 1.0, "upper": 9.0, "adm_2": 3106200},
            {"date": "2023-01-01", "pred": 5.0, "lower": 1.0, "upper": 9.0, "adm_2": "3170206"}
        ]);
        assert!(check(&doc(rows), &model(2)).is_ok());
        let rows = json!([{"date": "2023-01-01", "pred": 5.0, "lower": 1.0, "upper": 9.0, "adm_2": 123}]);
        assert!(check(&doc(rows), &model(2)).unwrap_err().mentions("adm_2"));
    }

    #[test]
    fn row_cap_and_empty_rows() {
        assert!(check(&doc(json!([])), &model(1)).unwrap_err().mentions("prediction"));
        let policy = ValidationPolicy { max_prediction_rows: 2, ..Default::default() };
        let err = validate_prediction(&doc(weekly_mg()), &model(1), &policy).unwrap_err();
        assert!(err.errors()[0].reason.contains("exceed"));
    }

    #[test]
    fn rows_given_as_json_string() {
        let v = doc(Value::String(weekly_mg().to_string()));
        assert_eq!(check(&v, &model(1)).unwrap().rows.len(), 3);
    }

    #[test]
    fn model_reference_must_match() {
        let mut v = doc(weekly_mg());
        v["model"] = json!(8);
        assert!(check(&v, &model(1)).unwrap_err().mentions("model"));
    }

    #[test]
    fn revalidating_output_is_identity() {
        let m = model(1);
        let p = check(&doc(weekly_mg()), &m).unwrap();
        let again = check(&to_document(&p), &m).unwrap();
        assert_eq!(p, again);
    }

    #[test]
    fn weekly_spacing_warnings() {
        let rows = json!([
            {"date": "2023-01-01", "pred": 5.0, "lower": 1.0, "upper": 9.0, "adm_1": "MG"},
            {"date": "2023-01-11", "pred": 5.0, "lower": 1.0, "upper": 9.0, "adm_1": "MG"}
        ]);
        let m = model(1);
        let p = check(&doc(rows), &m).unwrap();
        let w = spacing_warnings(&p, &m);
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("10 days"));
    }
}
