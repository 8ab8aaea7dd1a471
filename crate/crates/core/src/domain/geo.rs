// SPDX-License-Identifier: Apache-2.0

//! Brazilian administrative geography: ADM levels, states (UF) and IBGE
//! municipality geocodes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// IBGE state code and two-letter abbreviation, ordered by code.
const STATES: [(u8, &str); 27] = [
    (11, "RO"),
    (12, "AC"),
    (13, "AM"),
    (14, "RR"),
    (15, "PA"),
    (16, "AP"),
    (17, "TO"),
    (21, "MA"),
    (22, "PI"),
    (23, "CE"),
    (24, "RN"),
    (25, "PB"),
    (26, "PE"),
    (27, "AL"),
    (28, "SE"),
    (29, "BA"),
    (31, "MG"),
    (32, "ES"),
    (33, "RJ"),
    (35, "SP"),
    (41, "PR"),
    (42, "SC"),
    (43, "RS"),
    (50, "MS"),
    (51, "MT"),
    (52, "GO"),
    (53, "DF"),
];

/// Default country for ADM 0 keys.
pub const DEFAULT_COUNTRY: &str = "BR";

/// A Brazilian federative unit (state or the federal district).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Uf(u8);

impl Uf {
    pub fn from_code(code: u8) -> Option<Self> {
        STATES.iter().any(|&(c, _)| c == code).then_some(Self(code))
    }

    pub fn from_abbrev(abbrev: &str) -> Option<Self> {
        STATES
            .iter()
            .find(|&&(_, a)| a.eq_ignore_ascii_case(abbrev))
            .map(|&(c, _)| Self(c))
    }

    /// Accepts either the two-digit IBGE code or the two-letter abbreviation.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if s.len() == 2 && s.bytes().all(|b| b.is_ascii_digit()) {
            s.parse().ok().and_then(Self::from_code)
        } else {
            Self::from_abbrev(s)
        }
    }

    pub fn code(self) -> u8 {
        self.0
    }

    pub fn abbrev(self) -> &'static str {
        STATES
            .iter()
            .find(|&&(c, _)| c == self.0)
            .map(|&(_, a)| a)
            .expect("Uf is only built from the state table")
    }

    pub fn all() -> impl Iterator<Item = Uf> {
        STATES.iter().map(|&(c, _)| Uf(c))
    }
}

impl fmt::Display for Uf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abbrev())
    }
}

impl Serialize for Uf {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.abbrev())
    }
}

impl<'de> Deserialize<'de> for Uf {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Uf::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown UF {s:?}")))
    }
}

/// A 7-digit IBGE municipality code whose first two digits name a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Geocode(u32);

impl Geocode {
    pub fn new(code: u64) -> Option<Self> {
        if !(1_000_000..=9_999_999).contains(&code) {
            return None;
        }
        let code = code as u32;
        Uf::from_code((code / 100_000) as u8).map(|_| Self(code))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn uf(self) -> Uf {
        Uf((self.0 / 100_000) as u8)
    }
}

impl fmt::Display for Geocode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Geocode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.len() != 7 || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("geocode must be 7 digits, got {s:?}"));
        }
        Geocode::new(s.parse().expect("7 ascii digits"))
            .ok_or_else(|| format!("geocode {s} has no known state prefix"))
    }
}

impl<'de> Deserialize<'de> for Geocode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let n = u64::deserialize(d)?;
        Geocode::new(n).ok_or_else(|| serde::de::Error::custom(format!("invalid geocode {n}")))
    }
}

/// Smallest spatial unit of a model's output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AdmLevel {
    National = 0,
    State = 1,
    Municipality = 2,
    SubMunicipality = 3,
}

impl AdmLevel {
    pub const ALL: [AdmLevel; 4] = [
        AdmLevel::National,
        AdmLevel::State,
        AdmLevel::Municipality,
        AdmLevel::SubMunicipality,
    ];

    pub fn from_number(n: i64) -> Option<Self> {
        match n {
            0 => Some(Self::National),
            1 => Some(Self::State),
            2 => Some(Self::Municipality),
            3 => Some(Self::SubMunicipality),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        self as u8
    }

    /// Prediction column carrying the key at this level.
    pub fn column(self) -> &'static str {
        match self {
            Self::National => "adm_0",
            Self::State => "adm_1",
            Self::Municipality => "adm_2",
            Self::SubMunicipality => "adm_3",
        }
    }
}

impl fmt::Display for AdmLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl Serialize for AdmLevel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.number())
    }
}

impl<'de> Deserialize<'de> for AdmLevel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let n = i64::deserialize(d)?;
        AdmLevel::from_number(n)
            .ok_or_else(|| serde::de::Error::custom(format!("adm_level must be 0..3, got {n}")))
    }
}

/// Identity of one spatial unit at a given level.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AdmKey {
    Country(String),
    State(Uf),
    Municipality(Geocode),
    SubMunicipality(u64),
}

impl AdmKey {
    pub fn level(&self) -> AdmLevel {
        match self {
            Self::Country(_) => AdmLevel::National,
            Self::State(_) => AdmLevel::State,
            Self::Municipality(_) => AdmLevel::Municipality,
            Self::SubMunicipality(_) => AdmLevel::SubMunicipality,
        }
    }

    /// Parses the textual form of a key at `level`.
    pub fn parse(level: AdmLevel, s: &str) -> Result<Self, String> {
        let s = s.trim();
        match level {
            AdmLevel::National => {
                if s.len() == 2 && s.bytes().all(|b| b.is_ascii_alphabetic()) {
                    Ok(Self::Country(s.to_ascii_uppercase()))
                } else {
                    Err(format!("country must be an ISO 3166-1 alpha-2 code, got {s:?}"))
                }
            }
            AdmLevel::State => Uf::parse(s)
                .map(Self::State)
                .ok_or_else(|| format!("unknown state {s:?}")),
            AdmLevel::Municipality => s.parse().map(Self::Municipality),
            AdmLevel::SubMunicipality => s
                .parse::<u64>()
                .ok()
                .filter(|&n| n > 0)
                .map(Self::SubMunicipality)
                .ok_or_else(|| format!("sub-municipality code must be a positive integer, got {s:?}")),
        }
    }
}

impl fmt::Display for AdmKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Country(c) => f.write_str(c),
            Self::State(uf) => write!(f, "{uf}"),
            Self::Municipality(g) => write!(f, "{g}"),
            Self::SubMunicipality(n) => write!(f, "{n}"),
        }
    }
}

impl Serialize for AdmKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
