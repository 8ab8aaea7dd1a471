// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::process::ExitCode;

use serde::Deserialize;
use thiserror::Error;

use arbohub_core::{FieldError, ValidationErrors};

/// Error body sent by the hub.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
pub struct ServerError {
    #[serde(default)]
    pub status: u16,
    #[serde(default)]
    pub code: String,
    #[serde(default)]
    pub message: String,
    #[serde(default)]
    pub details: Vec<FieldError>,
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input caught before anything was sent.
    #[error("{0}")]
    Invalid(String),
    #[error("{} invalid field(s)", .0.errors().len())]
    Validation(ValidationErrors),
    #[error("network: {0}")]
    Network(String),
    #[error("server answered {status}: {}", body.message)]
    Server { status: u16, body: ServerError },
}

impl CliError {
    /// 0 ok, 1 validation, 2 network, 3 other server errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Invalid(_) | Self::Validation(_) => 1,
            Self::Network(_) => 2,
            Self::Server { status: 409 | 422, .. } => 1,
            Self::Server { .. } => 3,
        }
    }

    pub fn exit(&self) -> ExitCode {
        ExitCode::from(self.exit_code())
    }

    /// Full diagnostic for stderr, with field errors as a table.
    pub fn render(&self) -> String {
        let mut out = format!("error: {self}\n");
        match self {
            Self::Validation(v) => out.push_str(&field_table(v.errors())),
            Self::Server { status, body } => {
                if !body.code.is_empty() {
                    let _ = writeln!(out, "code: {}", body.code);
                }
                out.push_str(&field_table(&body.details));
                if *status == 401 {
                    out.push_str(
                        "hint: pass --api-key, set ARBOHUB_API_KEY or add api_key to the config file\n",
                    );
                }
            }
            _ => {}
        }
        out
    }
}

impl From<ValidationErrors> for CliError {
    fn from(e: ValidationErrors) -> Self {
        Self::Validation(e)
    }
}

/// `row  field  reason`, one line per error, columns padded.
pub fn field_table(errors: &[FieldError]) -> String {
    if errors.is_empty() {
        return String::new();
    }
    let rows: Vec<(String, &str, &str)> = errors
        .iter()
        .map(|e| {
            let row = e.row.map(|r| r.to_string()).unwrap_or_else(|| "-".into());
            (row, e.field.as_str(), e.reason.as_str())
        })
        .collect();
    let w_row = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(3);
    let w_field = rows.iter().map(|r| r.1.len()).max().unwrap_or(0).max(5);
    let mut out = format!("{:<w_row$}  {:<w_field$}  reason\n", "row", "field");
    for (row, field, reason) in rows {
        let _ = writeln!(out, "{row:<w_row$}  {field:<w_field$}  {reason}");
    }
    out
}
