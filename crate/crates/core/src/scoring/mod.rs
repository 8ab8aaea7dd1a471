// SPDX-License-Identifier: Apache-2.0

//! Evaluation of interval predictions against observed counts.
//!
//! Each prediction row is read as a Gaussian with mean `pred` and standard
//! deviation `(upper − lower) / 4`. Rows are inner-joined to observations on
//! `(date, adm key)`; CRPS, log score, MAE and MSE are averaged over the
//! matched rows in row order.

mod report;
mod rules;

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::AdmKey;

pub use report::{score_indexed, score_prediction, score_rows, MetricValues, ScoreReport, UnmatchedRow};
pub use rules::{
    crps_normal, log_score_normal, mae, mse, sigma_from_interval, GaussianForecast,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoringError {
    #[error("degenerate interval: upper {upper} must exceed lower {lower}")]
    DegenerateInterval { lower: f64, upper: f64 },
    #[error("non-finite input {0}")]
    InvalidNumber(f64),
    #[error("scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {pred} predictions, {obs} observations")]
    LengthMismatch { pred: usize, obs: usize },
    #[error("negative observation {0}")]
    NegativeObservation(f64),
    #[error("duplicate observation for ({date}, {key})")]
    DuplicateObservation { date: NaiveDate, key: AdmKey },
    #[error("no prediction row matched an observation ({unmatched} rows unmatched)")]
    NoOverlap { unmatched: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Crps,
    LogScore,
    Mae,
    Mse,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Crps, Metric::LogScore, Metric::Mae, Metric::Mse];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Crps => "crps",
            Self::LogScore => "log_score",
            Self::Mae => "mae",
            Self::Mse => "mse",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }

    /// Log score is the log density, so larger is better; the rest are losses.
    pub fn orientation(self) -> Orientation {
        match self {
            Self::LogScore => Orientation::HigherIsBetter,
            _ => Orientation::LowerIsBetter,
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    LowerIsBetter,
    HigherIsBetter,
}

/// Observed counts keyed by `(date, adm key)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservationSeries {
    points: BTreeMap<(NaiveDate, AdmKey), f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
pub struct Observation {
    pub date: NaiveDate,
    pub adm_key: AdmKey,
    pub observed: f64,
}

impl ObservationSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, date: NaiveDate, key: AdmKey, observed: f64) -> Result<(), ScoringError> {
        if !observed.is_finite() {
            return Err(ScoringError::InvalidNumber(observed));
        }
        if observed < 0.0 {
            return Err(ScoringError::NegativeObservation(observed));
        }
        match self.points.entry((date, key)) {
            std::collections::btree_map::Entry::Occupied(e) => {
                let (date, key) = e.key().clone();
                Err(ScoringError::DuplicateObservation { date, key })
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(observed);
                Ok(())
            }
        }
    }

    pub fn get(&self, date: NaiveDate, key: &AdmKey) -> Option<f64> {
        self.points.get(&(date, key.clone())).copied()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Observations in (date, key) order.
    pub fn iter(&self) -> impl Iterator<Item = Observation> + '_ {
        self.points.iter().map(|((date, key), &observed)| Observation {
            date: *date,
            adm_key: key.clone(),
            observed,
        })
    }

    /// Merges `other` in, failing on any repeated `(date, key)`.
    pub fn merge(&mut self, other: ObservationSeries) -> Result<(), ScoringError> {
        for ((date, key), value) in other.points {
            self.insert(date, key, value)?;
        }
        Ok(())
    }
}

impl Serialize for ObservationSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}
