// SPDX-License-Identifier: Apache-2.0

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::rules::{mae, mse, GaussianForecast};
use super::{Metric, ObservationSeries, Orientation, ScoringError};
use crate::domain::{AdmLevel, PredictionRecord, PredictionRow};

/// One value per metric; absent metrics are omitted on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
#[serde(bound(deserialize = "T: Deserialize<'de>"))]
pub struct MetricValues<T> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crps: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_score: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mae: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mse: Option<T>,
}

impl<T> Default for MetricValues<T> {
    fn default() -> Self {
        Self {
            crps: None,
            log_score: None,
            mae: None,
            mse: None,
        }
    }
}

impl<T: Copy> MetricValues<T> {
    pub fn get(&self, metric: Metric) -> Option<T> {
        match metric {
            Metric::Crps => self.crps,
            Metric::LogScore => self.log_score,
            Metric::Mae => self.mae,
            Metric::Mse => self.mse,
        }
    }

    fn slot(&mut self, metric: Metric) -> &mut Option<T> {
        match metric {
            Metric::Crps => &mut self.crps,
            Metric::LogScore => &mut self.log_score,
            Metric::Mae => &mut self.mae,
            Metric::Mse => &mut self.mse,
        }
    }

    pub fn set(&mut self, metric: Metric, value: T) {
        *self.slot(metric) = Some(value);
    }

    /// Keeps only `metric`.
    pub fn only(&self, metric: Metric) -> Self {
        let mut out = Self::default();
        *out.slot(metric) = self.get(metric);
        out
    }
}

/// Why a prediction row did not contribute to the scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
pub struct UnmatchedRow {
    pub row: usize,
    pub date: NaiveDate,
    pub reason: String,
}

/// Aggregate evaluation of one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
pub struct ScoreReport {
    pub prediction_id: Option<u64>,
    pub scores: MetricValues<f64>,
    pub orientation: MetricValues<Orientation>,
    pub n_matched: usize,
    pub n_unmatched: usize,
    pub matched_start: NaiveDate,
    pub matched_end: NaiveDate,
    #[serde(default)]
    pub unmatched: Vec<UnmatchedRow>,
}

impl ScoreReport {
    /// Restricts scores and orientation to a single metric.
    pub fn restrict(mut self, metric: Metric) -> Self {
        self.scores = self.scores.only(metric);
        self.orientation = self.orientation.only(metric);
        self
    }
}

/// Joins `rows` to `observed` on `(date, key at level)` and averages the four
/// metrics over matched rows.
///
/// Rows with no observation, or with a zero-width interval, are listed in
/// `unmatched` and otherwise ignored. Fails with `NoOverlap` when nothing
/// matches.
pub fn score_rows(
    prediction_id: Option<u64>,
    rows: &[PredictionRow],
    level: AdmLevel,
    observed: &ObservationSeries,
) -> Result<ScoreReport, ScoringError> {
    score_indexed(prediction_id, rows.iter().enumerate(), level, observed)
}

/// [`score_rows`] over a subset of rows that keep their original indices.
pub fn score_indexed<'a>(
    prediction_id: Option<u64>,
    rows: impl IntoIterator<Item = (usize, &'a PredictionRow)>,
    level: AdmLevel,
    observed: &ObservationSeries,
) -> Result<ScoreReport, ScoringError> {
    let mut preds = Vec::new();
    let mut ys = Vec::new();
    let mut crps_sum = 0.0;
    let mut log_sum = 0.0;
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut unmatched = Vec::new();

    for (idx, row) in rows {
        let Some(key) = row.adm_key(level) else {
            unmatched.push(UnmatchedRow {
                row: idx,
                date: row.date,
                reason: format!("row has no {} value", level.column()),
            });
            continue;
        };
        let Some(y) = observed.get(row.date, &key) else {
            unmatched.push(UnmatchedRow {
                row: idx,
                date: row.date,
                reason: format!("no observation for ({}, {key})", row.date),
            });
            continue;
        };
        let forecast = match GaussianForecast::from_interval(row.pred, row.lower, row.upper) {
            Ok(f) => f,
            Err(e) => {
                unmatched.push(UnmatchedRow {
                    row: idx,
                    date: row.date,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        crps_sum += forecast.crps(y);
        log_sum += forecast.log_score(y);
        preds.push(row.pred);
        ys.push(y);
        dates.push(row.date);
    }

    let n = preds.len();
    if n == 0 {
        return Err(ScoringError::NoOverlap {
            unmatched: unmatched.len(),
        });
    }

    let mut scores = MetricValues::default();
    scores.set(Metric::Crps, crps_sum / n as f64);
    scores.set(Metric::LogScore, log_sum / n as f64);
    scores.set(Metric::Mae, mae(&preds, &ys)?);
    scores.set(Metric::Mse, mse(&preds, &ys)?);
    let mut orientation = MetricValues::default();
    for m in Metric::ALL {
        orientation.set(m, m.orientation());
    }

    Ok(ScoreReport {
        prediction_id,
        scores,
        orientation,
        n_matched: n,
        n_unmatched: unmatched.len(),
        matched_start: *dates.iter().min().expect("n > 0"),
        matched_end: *dates.iter().max().expect("n > 0"),
        unmatched,
    })
}

/// [`score_rows`] for a stored prediction of a model at `level`.
pub fn score_prediction(
    prediction: &PredictionRecord,
    level: AdmLevel,
    observed: &ObservationSeries,
) -> Result<ScoreReport, ScoringError> {
    score_rows(Some(prediction.id), &prediction.prediction.rows, level, observed)
}
