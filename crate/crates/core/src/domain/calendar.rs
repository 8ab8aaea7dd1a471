// SPDX-License-Identifier: Apache-2.0

//! Epidemiological weeks (semanas epidemiológicas).
//!
//! Weeks run Sunday to Saturday. Week 1 of year Y is the week ending on the
//! first Saturday of January that falls on or after January 4, so it always
//! holds at least four days of Y. A year has 52 or 53 weeks; the days of early
//! January before week 1 belong to the last week of the previous year, and
//! late-December days after the last week belong to week 1 of the next.

use std::fmt;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalendarError {
    #[error("week {week} out of range for {year} (1..={max})")]
    WeekOutOfRange { year: i32, week: u32, max: u32 },
    #[error("malformed epidemiological week {0:?}, expected YYYYWW")]
    Malformed(String),
    #[error("malformed date {0:?}, expected YYYY-mm-dd")]
    MalformedDate(String),
}

/// An epidemiological week, wire-encoded as the integer `YYYYWW`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EpiWeek {
    year: i32,
    week: u32,
}

/// Sunday opening week 1 of `year`.
fn week_one_start(year: i32) -> NaiveDate {
    let jan4 = NaiveDate::from_ymd_opt(year, 1, 4).expect("January 4 exists");
    let to_saturday = (6 + 7 - jan4.weekday().num_days_from_sunday()) % 7;
    jan4 + Days::new(to_saturday as u64) - Days::new(6)
}

impl EpiWeek {
    pub fn new(year: i32, week: u32) -> Result<Self, CalendarError> {
        let max = Self::weeks_in_year(year);
        if week == 0 || week > max {
            return Err(CalendarError::WeekOutOfRange { year, week, max });
        }
        Ok(Self { year, week })
    }

    /// 52 or 53.
    pub fn weeks_in_year(year: i32) -> u32 {
        let days = (week_one_start(year + 1) - week_one_start(year)).num_days();
        (days / 7) as u32
    }

    /// The week containing `date`. Total over valid dates.
    pub fn from_date(date: NaiveDate) -> Self {
        let mut year = date.year();
        if date < week_one_start(year) {
            year -= 1;
        } else if date >= week_one_start(year + 1) {
            year += 1;
        }
        let offset = (date - week_one_start(year)).num_days();
        Self {
            year,
            week: (offset / 7) as u32 + 1,
        }
    }

    /// Sunday opening the week.
    pub fn start_date(self) -> NaiveDate {
        week_one_start(self.year) + Days::new(7 * (self.week as u64 - 1))
    }

    /// Saturday closing the week.
    pub fn end_date(self) -> NaiveDate {
        self.start_date() + Days::new(6)
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn week(self) -> u32 {
        self.week
    }

    pub fn encode(self) -> u32 {
        self.year as u32 * 100 + self.week
    }

    pub fn decode(code: i64) -> Result<Self, CalendarError> {
        if !(100..=999_999).contains(&code) {
            return Err(CalendarError::Malformed(code.to_string()));
        }
        Self::new((code / 100) as i32, (code % 100) as u32)
    }

    /// Parses the six-character text form.
    pub fn parse(s: &str) -> Result<Self, CalendarError> {
        let t = s.trim();
        if t.len() != 6 || !t.bytes().all(|b| b.is_ascii_digit()) {
            return Err(CalendarError::Malformed(s.to_string()));
        }
        Self::decode(t.parse().expect("six ascii digits"))
    }

    pub fn succ(self) -> Self {
        Self::from_date(self.start_date() + Days::new(7))
    }

    /// Signed number of weeks from `self` to `other`.
    pub fn weeks_until(self, other: EpiWeek) -> i64 {
        (other.start_date() - self.start_date()).num_days() / 7
    }
}

impl fmt::Display for EpiWeek {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}{:02}", self.year, self.week)
    }
}

impl Serialize for EpiWeek {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u32(self.encode())
    }
}

impl<'de> Deserialize<'de> for EpiWeek {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let code = i64::deserialize(d)?;
        EpiWeek::decode(code).map_err(serde::de::Error::custom)
    }
}

pub fn epiweek_from_date(date: NaiveDate) -> EpiWeek {
    EpiWeek::from_date(date)
}

pub fn epiweek_to_start_date(year: i32, week: u32) -> Result<NaiveDate, CalendarError> {
    EpiWeek::new(year, week).map(EpiWeek::start_date)
}

/// Parses a wire date, which must be exactly `YYYY-mm-dd`.
pub fn parse_wire_date(s: &str) -> Result<NaiveDate, CalendarError> {
    let b = s.as_bytes();
    let shaped = b.len() == 10
        && b[4] == b'-'
        && b[7] == b'-'
        && b
            .iter()
            .enumerate()
            .all(|(i, c)| i == 4 || i == 7 || c.is_ascii_digit());
    if !shaped {
        return Err(CalendarError::MalformedDate(s.to_string()));
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| CalendarError::MalformedDate(s.to_string()))
}

pub fn is_sunday(date: NaiveDate) -> bool {
    date.weekday() == Weekday::Sun
}
