// SPDX-License-Identifier: Apache-2.0

//! Scoring without a server: the observed CSV goes into an in-memory store
//! and the same evaluation the hub runs is applied to it.

use std::collections::BTreeSet;
use std::io::Read;

use chrono::NaiveDate;

use arbohub_core::datastore::{DatasetKind, IngestOptions, IngestReport, TruthColumn};
use arbohub_core::evaluate::{evaluate, Evaluation};
use arbohub_core::{AdmLevel, Datastore, Disease, Metric, ScoreReport, ValidationPolicy};

use crate::error::CliError;
use crate::rows::{parse_rows, RowsFile};

#[derive(Debug, Clone, Default)]
pub struct OfflineOptions {
    /// Disease to score against; inferred when the observed file has one.
    pub disease: Option<Disease>,
    /// ADM level of the rows; inferred from the filled columns otherwise.
    pub level: Option<AdmLevel>,
    pub metric: Option<Metric>,
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    pub truth: TruthColumn,
}

#[derive(Debug, Clone)]
pub struct OfflineScore {
    pub report: ScoreReport,
    pub ingest: IngestReport,
}

pub fn score_offline(
    prediction: &RowsFile,
    observed: impl Read,
    opts: &OfflineOptions,
) -> Result<OfflineScore, CliError> {
    let (level, rows) = parse_rows(&prediction.rows, opts.level, &ValidationPolicy::default())?;
    let store = Datastore::in_memory();
    let ingest = store
        .ingest(
            DatasetKind::Infodengue,
            observed,
            &IngestOptions {
                disease: opts.disease,
            },
        )
        .map_err(|e| CliError::Invalid(format!("observed data: {e}")))?;
    let disease = match opts.disease {
        Some(d) => d,
        None => {
            let found: BTreeSet<Disease> = store.case_weeks().values().map(|r| r.disease).collect();
            match found.len() {
                1 => *found.first().unwrap(),
                0 => return Err(CliError::Invalid("observed data holds no valid rows".into())),
                _ => {
                    return Err(CliError::Invalid(
                        "observed data mixes diseases; choose one with --disease".into(),
                    ))
                }
            }
        }
    };
    let plan = Evaluation {
        start: opts.start,
        end: opts.end,
        truth: opts.truth,
        metric: opts.metric,
        ..Evaluation::new(disease, level)
    };
    let report = evaluate(&store, prediction.id, &rows, &plan).map_err(|e| CliError::Invalid(e.to_string()))?;
    Ok(OfflineScore { report, ingest })
}
