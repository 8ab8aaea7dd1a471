// SPDX-License-Identifier: Apache-2.0

//! Domain types shared by the service, the client and the scoring code.

pub mod calendar;
mod errors;
pub mod geo;
pub mod model;
pub mod prediction;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use calendar::{epiweek_from_date, epiweek_to_start_date, parse_wire_date, CalendarError, EpiWeek};
pub use errors::{FieldError, ValidationErrors};
pub use geo::{AdmKey, AdmLevel, Geocode, Uf};
pub use model::{
    validate_model_meta, Disease, ImplementationLanguage, ModelMeta, ModelRecord, TimeResolution,
};
pub use prediction::{
    is_commit_hash, spacing_warnings, validate_prediction, validate_rows, Prediction, PredictionRecord,
    PredictionRow, ROW_COLUMNS,
};

pub const DEFAULT_ALLOWED_HOSTS: [&str; 2] = ["github.com", "gitlab.com"];
pub const DEFAULT_MAX_PREDICTION_ROWS: usize = 10_000;

/// Tunables of metadata and prediction validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationPolicy {
    pub allowed_repository_hosts: Vec<String>,
    pub max_prediction_rows: usize,
    /// Report non-7-day gaps between weekly rows as warnings.
    pub strict_weekly_spacing: bool,
}

impl Default for ValidationPolicy {
    fn default() -> Self {
        Self {
            allowed_repository_hosts: DEFAULT_ALLOWED_HOSTS.iter().map(|h| h.to_string()).collect(),
            max_prediction_rows: DEFAULT_MAX_PREDICTION_ROWS,
            strict_weekly_spacing: false,
        }
    }
}

/// A contributor account. Keys are stored only as salted hashes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub id: u64,
    pub name: String,
    pub created_at: DateTime<Utc>,
    pub active: bool,
}

/// Stored form of an API key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiKey {
    /// Public prefix of the token, used for lookup.
    pub key_id: String,
    pub account: u64,
    /// Hex salt and hex SHA-256 of salt || secret.
    pub salt: String,
    pub hash: String,
    pub created_at: DateTime<Utc>,
    pub active: bool,
}
