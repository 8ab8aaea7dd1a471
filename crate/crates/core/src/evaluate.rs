// SPDX-License-Identifier: Apache-2.0

//! Scoring a prediction against the case counts held in a [`Datastore`].

use std::collections::BTreeSet;

use chrono::NaiveDate;
use thiserror::Error;

use crate::datastore::{Datastore, ObservedError, TruthColumn};
use crate::domain::{AdmKey, AdmLevel, Disease, PredictionRow};
use crate::scoring::{score_indexed, Metric, ObservationSeries, ScoreReport, ScoringError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluateError {
    #[error(transparent)]
    Observed(#[from] ObservedError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

/// What to score and against which ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Evaluation {
    pub disease: Disease,
    pub level: AdmLevel,
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    pub truth: TruthColumn,
    /// Restricts the report to one metric.
    pub metric: Option<Metric>,
}

impl Evaluation {
    pub fn new(disease: Disease, level: AdmLevel) -> Self {
        Self {
            disease,
            level,
            start: None,
            end: None,
            truth: TruthColumn::default(),
            metric: None,
        }
    }

    fn in_window(&self, date: NaiveDate) -> bool {
        self.start.is_none_or(|s| date >= s) && self.end.is_none_or(|e| date <= e)
    }
}

/// Scores the rows dated inside the window against the observed series of
/// every spatial unit they name. Rows outside the window are left out
/// entirely; the rest keep their original indices in the report.
pub fn evaluate(
    store: &Datastore,
    prediction_id: Option<u64>,
    rows: &[PredictionRow],
    plan: &Evaluation,
) -> Result<ScoreReport, EvaluateError> {
    let selected: Vec<(usize, &PredictionRow)> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| plan.in_window(r.date))
        .collect();
    let keys: BTreeSet<AdmKey> = selected
        .iter()
        .filter_map(|(_, r)| r.adm_key(plan.level))
        .collect();
    let mut observed = ObservationSeries::new();
    for key in &keys {
        let series = store.observed_series(plan.disease, key, plan.start, plan.end, plan.truth)?;
        observed.merge(series)?;
    }
    let report = score_indexed(prediction_id, selected, plan.level, &observed)?;
    Ok(match plan.metric {
        Some(m) => report.restrict(m),
        None => report,
    })
}
