// SPDX-License-Identifier: Apache-2.0

//! Core of the arbovirus forecast hub.
//!
//! * [`domain`]: model and prediction metadata, their validation rules, the
//!   Brazilian administrative geography and the epidemiological-week calendar.
//! * [`scoring`]: Gaussian CRPS and log score for interval forecasts, point
//!   metrics, and the prediction-versus-observation join.
//! * [`datastore`]: CSV ingestion, filtered/paginated queries and observed
//!   case series over the four surveillance datasets.
//! * [`evaluate`]: scoring a prediction against the stored case counts.
//! * [`storage`]: the snapshot-isolated tables everything above persists in.

pub mod datastore;
pub mod domain;
pub mod evaluate;
#[cfg(feature = "openapi")]
mod openapi;
pub mod scoring;
pub mod storage;

pub use datastore::{DatasetKind, Datastore, PageEnvelope, Pagination};
pub use domain::{
    AdmKey, AdmLevel, Disease, EpiWeek, FieldError, Geocode, ModelMeta, ModelRecord, Prediction,
    PredictionRecord, PredictionRow, Uf, ValidationErrors, ValidationPolicy,
};

pub use scoring::{Metric, ObservationSeries, Orientation, ScoreReport};
