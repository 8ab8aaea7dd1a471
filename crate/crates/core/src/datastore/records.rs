// SPDX-License-Identifier: Apache-2.0

//! The four observed datasets: weekly case counts, daily climate, epidemic
//! parameters per municipality-year, and ovitrap egg counts.

use std::collections::HashMap;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use csv::StringRecord;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::query::DatasetFilter;
use super::{DatasetKind, IngestOptions};
use crate::domain::calendar::{is_sunday, parse_wire_date};
use crate::domain::{Disease, EpiWeek, Geocode};

/// A record type that can be ingested from CSV and queried.
pub trait Dataset: Clone + Serialize + DeserializeOwned + Send + Sync + 'static {
    /// Natural key; upserts replace the record with the same key.
    type Key: Ord + Clone + Serialize + DeserializeOwned + Send + Sync;

    const KIND: DatasetKind;
    /// Header columns every file must carry.
    const COLUMNS: &'static [&'static str];

    fn key(&self) -> Self::Key;
    fn from_csv(row: &CsvRow<'_>, opts: &IngestOptions) -> Result<Self, String>;
    fn matches(&self, filter: &DatasetFilter) -> bool;
}

/// One CSV record viewed through its header.
pub struct CsvRow<'a> {
    pub(crate) index: &'a HashMap<String, usize>,
    pub(crate) record: &'a StringRecord,
}

impl CsvRow<'_> {
    fn raw(&self, name: &str) -> Option<&str> {
        self.index
            .get(name)
            .and_then(|&i| self.record.get(i))
            .map(str::trim)
            .filter(|s| !s.is_empty())
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn required<T: FromStr>(&self, name: &str) -> Result<T, String> {
        let raw = self.raw(name).ok_or_else(|| format!("{name} is required"))?;
        raw.parse()
            .map_err(|_| format!("{name}: cannot parse {raw:?}"))
    }

    pub fn optional<T: FromStr>(&self, name: &str) -> Result<Option<T>, String> {
        self.raw(name)
            .map(|raw| raw.parse().map_err(|_| format!("{name}: cannot parse {raw:?}")))
            .transpose()
    }

    pub fn text(&self, name: &str) -> Option<String> {
        self.raw(name).map(str::to_string)
    }

    pub fn date(&self, name: &str) -> Result<NaiveDate, String> {
        let raw = self.raw(name).ok_or_else(|| format!("{name} is required"))?;
        parse_wire_date(raw).map_err(|e| format!("{name}: {e}"))
    }

    pub fn real(&self, name: &str) -> Result<f64, String> {
        let v: f64 = self.required(name)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("{name} must be finite"))
        }
    }

    pub fn geocode(&self, name: &str) -> Result<Geocode, String> {
        let raw = self.raw(name).ok_or_else(|| format!("{name} is required"))?;
        raw.parse().map_err(|e| format!("{name}: {e}"))
    }

    pub fn epiweek(&self, name: &str) -> Result<EpiWeek, String> {
        let raw = self.raw(name).ok_or_else(|| format!("{name} is required"))?;
        EpiWeek::parse(raw).map_err(|e| format!("{name}: {e}"))
    }
}

fn in_range<T: PartialOrd + std::fmt::Display>(
    errs: &mut Vec<String>,
    name: &str,
    v: T,
    lo: T,
    hi: T,
) {
    if v < lo || v > hi {
        errs.push(format!("{name} out of range {lo}..{hi}"));
    }
}

fn ordered_triple(errs: &mut Vec<String>, stem: &str, min: f64, med: f64, max: f64) {
    if !(min <= med && med <= max) {
        errs.push(format!(
            "{stem}_min <= {stem}_med <= {stem}_max violated ({min}, {med}, {max})"
        ));
    }
}

fn finish<T>(errs: Vec<String>, value: T) -> Result<T, String> {
    if errs.is_empty() {
        Ok(value)
    } else {
        Err(errs.join("; "))
    }
}

fn geo_matches(geocode: Geocode, filter: &DatasetFilter) -> bool {
    filter.geocode.is_none_or(|g| g == geocode) && filter.uf.is_none_or(|uf| uf == geocode.uf())
}

fn date_matches(date: NaiveDate, filter: &DatasetFilter) -> bool {
    filter.start.is_none_or(|s| date >= s) && filter.end.is_none_or(|e| date <= e)
}

/// Weekly notified and estimated cases for one municipality and disease.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
pub struct CaseWeekRecord {
    #[serde(rename = "data_iniSE")]
    pub week_start: NaiveDate,
    #[serde(rename = "SE")]
    pub se: EpiWeek,
    pub casos: u64,
    pub casos_est: f64,
    pub casos_prov: Option<i64>,
    pub municipio_geocodigo: Geocode,
    pub p_rt1: f64,
    pub p_inc100k: f64,
    pub nivel: u8,
    pub versao_modelo: Option<String>,
    #[serde(rename = "Rt")]
    pub rt: f64,
    pub municipio_nome: Option<String>,
    pub pop: u64,
    pub receptivo: u8,
    pub transmissao: u8,
    pub nivel_inc: u8,
    pub disease: Disease,
}

impl Dataset for CaseWeekRecord {
    type Key = (Disease, Geocode, EpiWeek);
    const KIND: DatasetKind = DatasetKind::Infodengue;
    const COLUMNS: &'static [&'static str] = &[
        "data_iniSE",
        "SE",
        "casos",
        "casos_est",
        "casos_prov",
        "municipio_geocodigo",
        "p_rt1",
        "p_inc100k",
        "nivel",
        "versao_modelo",
        "Rt",
        "municipio_nome",
        "pop",
        "receptivo",
        "transmissao",
        "nivel_inc",
    ];

    fn key(&self) -> Self::Key {
        (self.disease, self.municipio_geocodigo, self.se)
    }

    fn from_csv(row: &CsvRow<'_>, opts: &IngestOptions) -> Result<Self, String> {
        let disease = match row.text("disease") {
            Some(d) => d.parse::<Disease>()?,
            None => opts
                .disease
                .ok_or("disease is required (no column value and no ingest-time disease)")?,
        };
        let rec = Self {
            week_start: row.date("data_iniSE")?,
            se: row.epiweek("SE")?,
            casos: row.required("casos")?,
            casos_est: row.real("casos_est")?,
            casos_prov: row.optional("casos_prov")?,
            municipio_geocodigo: row.geocode("municipio_geocodigo")?,
            p_rt1: row.real("p_rt1")?,
            p_inc100k: row.real("p_inc100k")?,
            nivel: row.required("nivel")?,
            versao_modelo: row.text("versao_modelo"),
            rt: row.real("Rt")?,
            municipio_nome: row.text("municipio_nome"),
            pop: row.required("pop")?,
            receptivo: row.required("receptivo")?,
            transmissao: row.required("transmissao")?,
            nivel_inc: row.required("nivel_inc")?,
            disease,
        };
        let mut errs = Vec::new();
        in_range(&mut errs, "nivel", rec.nivel, 1, 4);
        in_range(&mut errs, "receptivo", rec.receptivo, 0, 3);
        in_range(&mut errs, "transmissao", rec.transmissao, 0, 3);
        in_range(&mut errs, "nivel_inc", rec.nivel_inc, 0, 2);
        in_range(&mut errs, "p_rt1", rec.p_rt1, 0.0, 1.0);
        if rec.casos_est < 0.0 {
            errs.push("casos_est must be >= 0".into());
        }
        if rec.p_inc100k < 0.0 {
            errs.push("p_inc100k must be >= 0".into());
        }
        if rec.rt < 0.0 {
            errs.push("Rt must be >= 0".into());
        }
        if rec.pop == 0 {
            errs.push("pop must be > 0".into());
        }
        if rec.se.start_date() != rec.week_start || !is_sunday(rec.week_start) {
            errs.push(format!(
                "data_iniSE {} is not the Sunday opening SE {} ({})",
                rec.week_start,
                rec.se,
                rec.se.start_date()
            ));
        }
        finish(errs, rec)
    }

    fn matches(&self, filter: &DatasetFilter) -> bool {
        filter.disease.is_none_or(|d| d == self.disease)
            && geo_matches(self.municipio_geocodigo, filter)
            && date_matches(self.week_start, filter)
    }
}

/// Daily municipal climate summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
pub struct ClimateDayRecord {
    pub date: NaiveDate,
    pub geocodigo: Geocode,
    pub temp_min: f64,
    pub temp_med: f64,
    pub temp_max: f64,
    pub precip_min: f64,
    pub precip_med: f64,
    pub precip_max: f64,
    pub precip_tot: f64,
    /// Stored as delivered; the unit is reported as atm upstream.
    pub pressao_min: f64,
    pub pressao_med: f64,
    pub pressao_max: f64,
    pub umid_min: f64,
    pub umid_med: f64,
    pub umid_max: f64,
}

impl Dataset for ClimateDayRecord {
    type Key = (Geocode, NaiveDate);
    const KIND: DatasetKind = DatasetKind::Climate;
    const COLUMNS: &'static [&'static str] = &[
        "date",
        "geocodigo",
        "temp_min",
        "temp_med",
        "temp_max",
        "precip_min",
        "precip_med",
        "precip_max",
        "precip_tot",
        "pressao_min",
        "pressao_med",
        "pressao_max",
        "umid_min",
        "umid_med",
        "umid_max",
    ];

    fn key(&self) -> Self::Key {
        (self.geocodigo, self.date)
    }

    fn from_csv(row: &CsvRow<'_>, _opts: &IngestOptions) -> Result<Self, String> {
        let rec = Self {
            date: row.date("date")?,
            geocodigo: row.geocode("geocodigo")?,
            temp_min: row.real("temp_min")?,
            temp_med: row.real("temp_med")?,
            temp_max: row.real("temp_max")?,
            precip_min: row.real("precip_min")?,
            precip_med: row.real("precip_med")?,
            precip_max: row.real("precip_max")?,
            precip_tot: row.real("precip_tot")?,
            pressao_min: row.real("pressao_min")?,
            pressao_med: row.real("pressao_med")?,
            pressao_max: row.real("pressao_max")?,
            umid_min: row.real("umid_min")?,
            umid_med: row.real("umid_med")?,
            umid_max: row.real("umid_max")?,
        };
        let mut errs = Vec::new();
        ordered_triple(&mut errs, "temp", rec.temp_min, rec.temp_med, rec.temp_max);
        ordered_triple(&mut errs, "precip", rec.precip_min, rec.precip_med, rec.precip_max);
        ordered_triple(&mut errs, "pressao", rec.pressao_min, rec.pressao_med, rec.pressao_max);
        ordered_triple(&mut errs, "umid", rec.umid_min, rec.umid_med, rec.umid_max);
        for (name, v) in [
            ("precip_min", rec.precip_min),
            ("precip_med", rec.precip_med),
            ("precip_max", rec.precip_max),
            ("precip_tot", rec.precip_tot),
        ] {
            if v < 0.0 {
                errs.push(format!("{name} must be >= 0"));
            }
        }
        for (name, v) in [
            ("umid_min", rec.umid_min),
            ("umid_med", rec.umid_med),
            ("umid_max", rec.umid_max),
        ] {
            in_range(&mut errs, name, v, 0.0, 100.0);
        }
        finish(errs, rec)
    }

    fn matches(&self, filter: &DatasetFilter) -> bool {
        geo_matches(self.geocodigo, filter) && date_matches(self.date, filter)
    }
}

/// Fitted epidemic parameters for one municipality, disease and year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
pub struct EpidemicParamsRecord {
    pub disease: String,
    #[serde(rename = "CID10")]
    pub cid10: String,
    pub year: i32,
    pub geocode: Geocode,
    pub muni_name: Option<String>,
    pub peak_week: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    #[serde(rename = "R0")]
    pub r0: f64,
    pub total_cases: u64,
    pub alpha: Option<f64>,
    pub sum_res: Option<f64>,
    pub ep_ini: String,
    pub ep_end: String,
    pub ep_dur: u32,
}

impl EpidemicParamsRecord {
    fn normalized_disease(&self) -> Disease {
        Disease::parse_lenient(&self.disease).expect("validated on ingest")
    }
}

impl Dataset for EpidemicParamsRecord {
    type Key = (Disease, Geocode, i32);
    const KIND: DatasetKind = DatasetKind::Episcanner;
    const COLUMNS: &'static [&'static str] = &[
        "disease",
        "CID10",
        "year",
        "geocode",
        "muni_name",
        "peak_week",
        "beta",
        "gamma",
        "R0",
        "total_cases",
        "alpha",
        "sum_res",
        "ep_ini",
        "ep_end",
        "ep_dur",
    ];

    fn key(&self) -> Self::Key {
        (self.normalized_disease(), self.geocode, self.year)
    }

    fn from_csv(row: &CsvRow<'_>, _opts: &IngestOptions) -> Result<Self, String> {
        let disease = row.text("disease").ok_or("disease is required")?;
        if Disease::parse_lenient(&disease).is_none() {
            return Err(format!("disease: unknown value {disease:?}"));
        }
        let finite = |name: &str| -> Result<Option<f64>, String> {
            match row.optional::<f64>(name)? {
                Some(v) if !v.is_finite() => Err(format!("{name} must be finite")),
                v => Ok(v),
            }
        };
        let rec = Self {
            disease,
            cid10: row.text("CID10").ok_or("CID10 is required")?,
            year: row.required("year")?,
            geocode: row.geocode("geocode")?,
            muni_name: row.text("muni_name"),
            peak_week: finite("peak_week")?,
            beta: finite("beta")?,
            gamma: finite("gamma")?,
            r0: row.real("R0")?,
            total_cases: row.required("total_cases")?,
            alpha: finite("alpha")?,
            sum_res: finite("sum_res")?,
            ep_ini: row.text("ep_ini").ok_or("ep_ini is required")?,
            ep_end: row.text("ep_end").ok_or("ep_end is required")?,
            ep_dur: row.required("ep_dur")?,
        };
        let ini = EpiWeek::parse(&rec.ep_ini).map_err(|e| format!("ep_ini: {e}"))?;
        let end = EpiWeek::parse(&rec.ep_end).map_err(|e| format!("ep_end: {e}"))?;
        let mut errs = Vec::new();
        if rec.r0 <= 0.0 {
            errs.push("R0 must be > 0".into());
        }
        if rec.ep_dur < 1 {
            errs.push("ep_dur must be >= 1".into());
        }
        if ini > end {
            errs.push(format!("ep_ini {ini} is after ep_end {end}"));
        } else {
            let span = ini.weeks_until(end) + 1;
            if (rec.ep_dur as i64 - span).abs() > 1 {
                errs.push(format!(
                    "ep_dur {} inconsistent with {ini}..{end} ({span} weeks)",
                    rec.ep_dur
                ));
            }
        }
        finish(errs, rec)
    }

    fn matches(&self, filter: &DatasetFilter) -> bool {
        filter.disease.is_none_or(|d| d == self.normalized_disease())
            && geo_matches(self.geocode, filter)
            && filter.start.is_none_or(|s| self.year >= s.year())
            && filter.end.is_none_or(|e| self.year <= e.year())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
#[serde(rename_all = "lowercase")]
pub enum TrapStatus {
    Positive,
    Negative,
}

impl FromStr for TrapStatus {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "positive" => Ok(Self::Positive),
            "negative" => Ok(Self::Negative),
            _ => Err(()),
        }
    }
}

/// One ovitrap collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
pub struct OvitrapRecord {
    pub trap_id: String,
    pub latitude: f64,
    pub longitude: f64,
    pub install_date: NaiveDate,
    pub collection_date: NaiveDate,
    pub epi_week: EpiWeek,
    pub year: i32,
    pub egg_count: u64,
    pub status: TrapStatus,
    pub municipality_geocode: Geocode,
}

impl Dataset for OvitrapRecord {
    type Key = (String, NaiveDate);
    const KIND: DatasetKind = DatasetKind::Ovitrap;
    const COLUMNS: &'static [&'static str] = &[
        "trap_id",
        "latitude",
        "longitude",
        "install_date",
        "collection_date",
        "epi_week",
        "year",
        "egg_count",
        "status",
        "municipality_geocode",
    ];

    fn key(&self) -> Self::Key {
        (self.trap_id.clone(), self.collection_date)
    }

    fn from_csv(row: &CsvRow<'_>, _opts: &IngestOptions) -> Result<Self, String> {
        let rec = Self {
            trap_id: row.text("trap_id").ok_or("trap_id is required")?,
            latitude: row.real("latitude")?,
            longitude: row.real("longitude")?,
            install_date: row.date("install_date")?,
            collection_date: row.date("collection_date")?,
            epi_week: row.epiweek("epi_week")?,
            year: row.required("year")?,
            egg_count: row.required("egg_count")?,
            status: row.required("status")?,
            municipality_geocode: row.geocode("municipality_geocode")?,
        };
        let mut errs = Vec::new();
        in_range(&mut errs, "latitude", rec.latitude, -90.0, 90.0);
        in_range(&mut errs, "longitude", rec.longitude, -180.0, 180.0);
        if rec.collection_date < rec.install_date {
            errs.push(format!(
                "collection_date {} precedes install_date {}",
                rec.collection_date, rec.install_date
            ));
        }
        let positive = rec.status == TrapStatus::Positive;
        if positive != (rec.egg_count > 0) {
            errs.push(format!(
                "status {:?} inconsistent with egg_count {}",
                rec.status, rec.egg_count
            ));
        }
        finish(errs, rec)
    }

    fn matches(&self, filter: &DatasetFilter) -> bool {
        geo_matches(self.municipality_geocode, filter) && date_matches(self.collection_date, filter)
    }
}
