// SPDX-License-Identifier: Apache-2.0

//! Registered forecasting models and the rules their metadata must follow.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use url::Url;

use super::errors::{Collector, FieldError, ValidationErrors};
use super::geo::AdmLevel;
use super::ValidationPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
#[serde(rename_all = "lowercase")]
pub enum Disease {
    Dengue,
    Zika,
    Chikungunya,
}

impl Disease {
    pub const ALL: [Disease; 3] = [Disease::Dengue, Disease::Zika, Disease::Chikungunya];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Dengue => "dengue",
            Self::Zika => "zika",
            Self::Chikungunya => "chikungunya",
        }
    }

    /// Also accepts the short `chik` spelling used by some exports.
    pub fn parse_lenient(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "chik" => Some(Self::Chikungunya),
            other => other.parse().ok(),
        }
    }
}

impl FromStr for Disease {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown disease {s:?}, expected dengue, zika or chikungunya"))
    }
}

impl fmt::Display for Disease {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
#[serde(rename_all = "lowercase")]
pub enum TimeResolution {
    Day,
    Week,
    Month,
    Year,
}

impl TimeResolution {
    pub const ALL: [TimeResolution; 4] = [Self::Day, Self::Week, Self::Month, Self::Year];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Day => "day",
            Self::Week => "week",
            Self::Month => "month",
            Self::Year => "year",
        }
    }
}

impl FromStr for TimeResolution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown time_resolution {s:?}, expected day, week, month or year"))
    }
}

impl fmt::Display for TimeResolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Languages a model may declare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ImplementationLanguage {
    Python,
    R,
    Julia,
    C,
    Cpp,
    CSharp,
    Rust,
    Go,
    Java,
    JavaScript,
    Kotlin,
    Zig,
    Other,
}

impl ImplementationLanguage {
    pub const ALL: [ImplementationLanguage; 13] = [
        Self::Python,
        Self::R,
        Self::Julia,
        Self::C,
        Self::Cpp,
        Self::CSharp,
        Self::Rust,
        Self::Go,
        Self::Java,
        Self::JavaScript,
        Self::Kotlin,
        Self::Zig,
        Self::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Python => "Python",
            Self::R => "R",
            Self::Julia => "Julia",
            Self::C => "C",
            Self::Cpp => "C++",
            Self::CSharp => "C#",
            Self::Rust => "Rust",
            Self::Go => "Go",
            Self::Java => "Java",
            Self::JavaScript => "JavaScript",
            Self::Kotlin => "Kotlin",
            Self::Zig => "Zig",
            Self::Other => "other",
        }
    }
}

impl FromStr for ImplementationLanguage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|l| l.as_str()).collect();
                format!("unknown implementation_language {s:?}, expected one of {}", names.join(", "))
            })
    }
}

impl fmt::Display for ImplementationLanguage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for ImplementationLanguage {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ImplementationLanguage {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

pub const MAX_NAME_LEN: usize = 100;

/// Metadata supplied when a model is registered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
pub struct ModelMeta {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub repository: String,
    pub implementation_language: ImplementationLanguage,
    pub disease: Disease,
    pub temporal: bool,
    pub spatial: bool,
    pub categorical: bool,
    pub adm_level: AdmLevel,
    pub time_resolution: TimeResolution,
    pub sprint: bool,
}

/// A model as stored: metadata plus server-assigned identity and owner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
pub struct ModelRecord {
    pub id: u64,
    pub owner: u64,
    #[serde(flatten)]
    pub meta: ModelMeta,
}

const MODEL_FIELDS: [&str; 11] = [
    "name",
    "description",
    "repository",
    "implementation_language",
    "disease",
    "temporal",
    "spatial",
    "categorical",
    "adm_level",
    "time_resolution",
    "sprint",
];

fn required<'a>(doc: &'a Map<String, Value>, field: &str) -> Result<&'a Value, FieldError> {
    match doc.get(field) {
        None | Some(Value::Null) => Err(FieldError::new(field, "required field is missing")),
        Some(v) => Ok(v),
    }
}

fn string_field<'a>(doc: &'a Map<String, Value>, field: &str) -> Result<&'a str, FieldError> {
    required(doc, field)?
        .as_str()
        .ok_or_else(|| FieldError::new(field, "must be a string"))
}

fn bool_field(doc: &Map<String, Value>, field: &str) -> Result<bool, FieldError> {
    required(doc, field)?
        .as_bool()
        .ok_or_else(|| FieldError::new(field, "must be a boolean"))
}

fn enum_field<T: FromStr<Err = String>>(doc: &Map<String, Value>, field: &str) -> Result<T, FieldError> {
    string_field(doc, field)?
        .parse()
        .map_err(|e: String| FieldError::new(field, e))
}

/// Checks that `raw` is an absolute http(s) URL on an allowed git host.
pub fn check_repository(raw: &str, allowed_hosts: &[String]) -> Result<(), String> {
    let url = Url::parse(raw).map_err(|e| format!("not an absolute URL: {e}"))?;
    if !matches!(url.scheme(), "https" | "http") {
        return Err(format!("scheme {:?} not allowed, use https", url.scheme()));
    }
    let host = url.host_str().unwrap_or_default().to_ascii_lowercase();
    if !allowed_hosts.iter().any(|h| h.eq_ignore_ascii_case(&host)) {
        return Err(format!(
            "host {host:?} is not an allowed public git host ({})",
            allowed_hosts.join(", ")
        ));
    }
    let segments = url
        .path_segments()
        .map(|s| s.filter(|p| !p.is_empty()).count())
        .unwrap_or(0);
    if segments < 2 {
        return Err("repository URL must name an owner and a project".into());
    }
    Ok(())
}

/// Validates a raw model document into typed metadata, reporting every
/// failing field at once.
pub fn validate_model_meta(
    candidate: &Value,
    policy: &ValidationPolicy,
) -> Result<ModelMeta, ValidationErrors> {
    let Some(doc) = candidate.as_object() else {
        return Err(ValidationErrors::single(FieldError::new(
            "body",
            "must be a JSON object",
        )));
    };
    let mut c = Collector::default();

    for key in doc.keys() {
        if !MODEL_FIELDS.contains(&key.as_str()) {
            c.push(FieldError::new(key.as_str(), "unknown field"));
        }
    }

    let name = c.take(string_field(doc, "name").and_then(|n| {
        let n = n.trim();
        if n.is_empty() {
            Err(FieldError::new("name", "must not be empty"))
        } else if n.chars().count() > MAX_NAME_LEN {
            Err(FieldError::new(
                "name",
                format!("longer than {MAX_NAME_LEN} characters"),
            ))
        } else {
            Ok(n.to_string())
        }
    }));
    let description = c.take(match doc.get("description") {
        None | Some(Value::Null) => Ok(String::new()),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(FieldError::new("description", "must be a string")),
    });
    let repository = c.take(string_field(doc, "repository").and_then(|r| {
        check_repository(r, &policy.allowed_repository_hosts)
            .map(|()| r.to_string())
            .map_err(|e| FieldError::new("repository", e))
    }));
    let implementation_language = c.take(enum_field(doc, "implementation_language"));
    let disease = c.take(enum_field::<Disease>(doc, "disease"));
    let temporal = c.take(bool_field(doc, "temporal"));
    let spatial = c.take(bool_field(doc, "spatial"));
    let categorical = c.take(bool_field(doc, "categorical"));
    let adm_level = c.take(required(doc, "adm_level").and_then(|v| {
        v.as_i64()
            .and_then(AdmLevel::from_number)
            .ok_or_else(|| FieldError::new("adm_level", format!("must be 0, 1, 2 or 3, got {v}")))
    }));
    let time_resolution = c.take(enum_field(doc, "time_resolution"));
    let sprint = c.take(bool_field(doc, "sprint"));

    c.finish(|| ModelMeta {
        name: name.unwrap(),
        description: description.unwrap(),
        repository: repository.unwrap(),
        implementation_language: implementation_language.unwrap(),
        disease: disease.unwrap(),
        temporal: temporal.unwrap(),
        spatial: spatial.unwrap(),
        categorical: categorical.unwrap(),
        adm_level: adm_level.unwrap(),
        time_resolution: time_resolution.unwrap(),
        sprint: sprint.unwrap(),
    })
}
