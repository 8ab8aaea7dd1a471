// SPDX-License-Identifier: Apache-2.0

//! Ingestion and querying of the observed surveillance datasets.
//!
//! Each dataset kind is one table keyed by its natural key, so re-ingesting a
//! file is an upsert. A file is applied in a single commit: readers see either
//! none or all of its accepted rows.

mod query;
mod records;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Read;
use std::str::FromStr;
use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::geo::DEFAULT_COUNTRY;
use crate::domain::{AdmKey, AdmLevel, Disease, ValidationErrors};
use crate::scoring::ObservationSeries;
use crate::storage::{Backend, MemoryBackend, StoreError, Table};

pub use query::{
    DatasetFilter, DatasetQuery, PageEnvelope, PageLimits, PageRequest, Pagination,
    DEFAULT_MAX_PER_PAGE, DEFAULT_PER_PAGE,
};
pub use records::{
    CaseWeekRecord, ClimateDayRecord, CsvRow, Dataset, EpidemicParamsRecord, OvitrapRecord,
    TrapStatus,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Infodengue,
    Climate,
    Episcanner,
    Ovitrap,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 4] = [
        DatasetKind::Infodengue,
        DatasetKind::Climate,
        DatasetKind::Episcanner,
        DatasetKind::Ovitrap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Infodengue => "infodengue",
            Self::Climate => "climate",
            Self::Episcanner => "episcanner",
            Self::Ovitrap => "ovitrap",
        }
    }

    /// Query filters the kind accepts, besides `page` and `per_page`.
    pub fn filters(self) -> &'static [&'static str] {
        match self {
            Self::Infodengue | Self::Episcanner => &["disease", "geocode", "uf", "start", "end"],
            Self::Climate | Self::Ovitrap => &["geocode", "uf", "start", "end"],
        }
    }

    /// Header columns a CSV of this kind must carry.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Self::Infodengue => CaseWeekRecord::COLUMNS,
            Self::Climate => ClimateDayRecord::COLUMNS,
            Self::Episcanner => EpidemicParamsRecord::COLUMNS,
            Self::Ovitrap => OvitrapRecord::COLUMNS,
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetKind {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| IngestError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestOptions {
    /// Disease for infodengue rows whose file has no `disease` value.
    pub disease: Option<Disease>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
pub struct Rejection {
    /// 1-based line in the file, header included.
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
pub struct IngestReport {
    pub kind: DatasetKind,
    pub read: usize,
    pub inserted: usize,
    pub updated: usize,
    pub rejected: usize,
    pub rejections: Vec<Rejection>,
    /// Header columns outside the kind's dictionary; their values are dropped.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ignored_columns: Vec<String>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("unknown dataset kind {0:?}; expected one of infodengue, climate, episcanner, ovitrap")]
    UnknownKind(String),
    #[error("missing required column(s): {}", .0.join(", "))]
    MissingColumns(Vec<String>),
    #[error("column {0:?} appears more than once in the header")]
    DuplicateColumn(String),
    #[error("unreadable CSV header: {0}")]
    Header(#[source] csv::Error),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObservedError {
    #[error("observed series are available for adm levels 0, 1 and 2, not {0}")]
    UnsupportedLevel(AdmLevel),
    #[error("unknown adm key {0:?}")]
    UnknownKey(String),
}

/// Which infodengue count serves as ground truth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
#[serde(rename_all = "snake_case")]
pub enum TruthColumn {
    #[default]
    Casos,
    CasosEst,
}

impl TruthColumn {
    fn value(self, r: &CaseWeekRecord) -> f64 {
        match self {
            Self::Casos => r.casos as f64,
            Self::CasosEst => r.casos_est,
        }
    }
}

impl FromStr for TruthColumn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "casos" => Ok(Self::Casos),
            "casos_est" => Ok(Self::CasosEst),
            _ => Err(format!("expected casos or casos_est, got {s:?}")),
        }
    }
}

/// Items of a page, typed by kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
#[serde(untagged)]
pub enum DatasetPage {
    Infodengue(PageEnvelope<CaseWeekRecord>),
    Climate(PageEnvelope<ClimateDayRecord>),
    Episcanner(PageEnvelope<EpidemicParamsRecord>),
    Ovitrap(PageEnvelope<OvitrapRecord>),
}

impl DatasetPage {
    pub fn pagination(&self) -> Pagination {
        match self {
            Self::Infodengue(p) => p.pagination,
            Self::Climate(p) => p.pagination,
            Self::Episcanner(p) => p.pagination,
            Self::Ovitrap(p) => p.pagination,
        }
    }
}

type TableOf<R> = Table<<R as Dataset>::Key, R>;

/// The four dataset tables.
#[derive(Debug)]
pub struct Datastore {
    infodengue: TableOf<CaseWeekRecord>,
    climate: TableOf<ClimateDayRecord>,
    episcanner: TableOf<EpidemicParamsRecord>,
    ovitrap: TableOf<OvitrapRecord>,
    limits: PageLimits,
}

impl Datastore {
    pub fn open(backend: Arc<dyn Backend>, limits: PageLimits) -> Result<Self, StoreError> {
        Ok(Self {
            infodengue: Table::open("infodengue", backend.clone())?,
            climate: Table::open("climate", backend.clone())?,
            episcanner: Table::open("episcanner", backend.clone())?,
            ovitrap: Table::open("ovitrap", backend)?,
            limits,
        })
    }

    pub fn in_memory() -> Self {
        Self::open(Arc::new(MemoryBackend), PageLimits::default()).expect("memory backend")
    }

    pub fn limits(&self) -> &PageLimits {
        &self.limits
    }

    /// Picks up ingests committed by another process.
    pub fn refresh(&self) -> Result<(), StoreError> {
        self.infodengue.refresh()?;
        self.climate.refresh()?;
        self.episcanner.refresh()?;
        self.ovitrap.refresh()?;
        Ok(())
    }

    pub fn ingest(
        &self,
        kind: DatasetKind,
        source: impl Read,
        opts: &IngestOptions,
    ) -> Result<IngestReport, IngestError> {
        match kind {
            DatasetKind::Infodengue => ingest_into(&self.infodengue, source, opts),
            DatasetKind::Climate => ingest_into(&self.climate, source, opts),
            DatasetKind::Episcanner => ingest_into(&self.episcanner, source, opts),
            DatasetKind::Ovitrap => ingest_into(&self.ovitrap, source, opts),
        }
    }

    pub fn query(&self, kind: DatasetKind, q: &DatasetQuery) -> DatasetPage {
        match kind {
            DatasetKind::Infodengue => DatasetPage::Infodengue(query_table(&self.infodengue, q)),
            DatasetKind::Climate => DatasetPage::Climate(query_table(&self.climate, q)),
            DatasetKind::Episcanner => DatasetPage::Episcanner(query_table(&self.episcanner, q)),
            DatasetKind::Ovitrap => DatasetPage::Ovitrap(query_table(&self.ovitrap, q)),
        }
    }

    /// [`Datastore::query`] from raw query-string pairs.
    pub fn query_pairs<S: AsRef<str>>(
        &self,
        kind: DatasetKind,
        pairs: &[(S, S)],
    ) -> Result<DatasetPage, ValidationErrors> {
        let q = DatasetQuery::from_pairs(kind, pairs, &self.limits)?;
        Ok(self.query(kind, &q))
    }

    pub fn case_weeks(&self) -> Arc<BTreeMap<<CaseWeekRecord as Dataset>::Key, CaseWeekRecord>> {
        self.infodengue.snapshot()
    }

    /// Weekly observed counts for `key`, summed over its municipalities.
    /// Weeks without data are absent.
    pub fn observed_series(
        &self,
        disease: Disease,
        key: &AdmKey,
        start: Option<NaiveDate>,
        end: Option<NaiveDate>,
        column: TruthColumn,
    ) -> Result<ObservationSeries, ObservedError> {
        let rows = self.case_weeks();
        observed_series_from(rows.values(), disease, key, start, end, column)
    }

    /// [`Datastore::observed_series`] with the key given as text at `level`.
    pub fn observed_series_for(
        &self,
        disease: Disease,
        level: AdmLevel,
        key: &str,
        start: Option<NaiveDate>,
        end: Option<NaiveDate>,
        column: TruthColumn,
    ) -> Result<ObservationSeries, ObservedError> {
        let key = AdmKey::parse(level, key).map_err(|_| ObservedError::UnknownKey(key.into()))?;
        self.observed_series(disease, &key, start, end, column)
    }
}

/// Aggregates case rows into the observed series of `key`.
pub fn observed_series_from<'a>(
    rows: impl IntoIterator<Item = &'a CaseWeekRecord>,
    disease: Disease,
    key: &AdmKey,
    start: Option<NaiveDate>,
    end: Option<NaiveDate>,
    column: TruthColumn,
) -> Result<ObservationSeries, ObservedError> {
    let member: Box<dyn Fn(&CaseWeekRecord) -> bool> = match key {
        AdmKey::Country(c) if c.eq_ignore_ascii_case(DEFAULT_COUNTRY) => Box::new(|_| true),
        AdmKey::Country(c) => return Err(ObservedError::UnknownKey(c.clone())),
        AdmKey::State(uf) => {
            let uf = *uf;
            Box::new(move |r| r.municipio_geocodigo.uf() == uf)
        }
        AdmKey::Municipality(g) => {
            let g = *g;
            Box::new(move |r| r.municipio_geocodigo == g)
        }
        AdmKey::SubMunicipality(_) => return Err(ObservedError::UnsupportedLevel(key.level())),
    };
    let mut sums: BTreeMap<NaiveDate, f64> = BTreeMap::new();
    for r in rows {
        if r.disease != disease
            || start.is_some_and(|s| r.week_start < s)
            || end.is_some_and(|e| r.week_start > e)
            || !member(r)
        {
            continue;
        }
        *sums.entry(r.week_start).or_default() += column.value(r);
    }
    let mut series = ObservationSeries::new();
    for (date, v) in sums {
        series
            .insert(date, key.clone(), v)
            .expect("validated counts are finite and non-negative");
    }
    Ok(series)
}

fn query_table<R: Dataset>(table: &TableOf<R>, q: &DatasetQuery) -> PageEnvelope<R> {
    let snap = table.snapshot();
    let matched: Vec<&R> = snap.values().filter(|r| r.matches(&q.filter)).collect();
    PageEnvelope::paginate(matched, q.page).map(Clone::clone)
}

fn ingest_into<R: Dataset>(
    table: &TableOf<R>,
    source: impl Read,
    opts: &IngestOptions,
) -> Result<IngestReport, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(source);
    let header = reader.headers().map_err(IngestError::Header)?.clone();
    let mut index = HashMap::new();
    for (i, name) in header.iter().enumerate() {
        if index.insert(name.trim().to_string(), i).is_some() {
            return Err(IngestError::DuplicateColumn(name.trim().to_string()));
        }
    }
    let mut missing: Vec<String> = R::COLUMNS
        .iter()
        .filter(|c| !index.contains_key(**c))
        .map(|c| c.to_string())
        .collect();
    let disease_column = R::KIND == DatasetKind::Infodengue;
    if disease_column && !index.contains_key("disease") && opts.disease.is_none() {
        missing.push("disease".into());
    }
    if !missing.is_empty() {
        return Err(IngestError::MissingColumns(missing));
    }
    let ignored_columns = index
        .keys()
        .filter(|c| !R::COLUMNS.contains(&c.as_str()) && !(disease_column && *c == "disease"))
        .cloned()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut accepted = Vec::new();
    let mut rejections = Vec::new();
    let mut read = 0;
    let mut record = csv::StringRecord::new();
    loop {
        let line = reader.position().line();
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                read += 1;
                let line = record.position().map_or(line, |p| p.line());
                if record.len() != header.len() {
                    rejections.push(Rejection {
                        line,
                        reason: format!("expected {} fields, found {}", header.len(), record.len()),
                    });
                    continue;
                }
                let row = CsvRow {
                    index: &index,
                    record: &record,
                };
                match R::from_csv(&row, opts) {
                    Ok(r) => accepted.push(r),
                    Err(reason) => rejections.push(Rejection { line, reason }),
                }
            }
            Err(e) => {
                read += 1;
                let line = e.position().map_or(line, |p| p.line());
                rejections.push(Rejection {
                    line,
                    reason: e.to_string(),
                });
                if !matches!(e.kind(), csv::ErrorKind::Utf8 { .. }) {
                    break;
                }
            }
        }
    }

    let (inserted, updated) = table.update(|m| {
        let (mut inserted, mut updated) = (0, 0);
        for r in accepted {
            if m.insert(r.key(), r).is_some() {
                updated += 1;
            } else {
                inserted += 1;
            }
        }
        (inserted, updated)
    })?;

    Ok(IngestReport {
        kind: R::KIND,
        read,
        inserted,
        updated,
        rejected: rejections.len(),
        rejections,
        ignored_columns,
    })
}
