// SPDX-License-Identifier: Apache-2.0

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::DatasetKind;
use crate::domain::calendar::parse_wire_date;
use crate::domain::{Disease, FieldError, Geocode, Uf, ValidationErrors};

pub const DEFAULT_PER_PAGE: u32 = 100;
pub const DEFAULT_MAX_PER_PAGE: u32 = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PageLimits {
    pub default_per_page: u32,
    pub max_per_page: u32,
}

impl Default for PageLimits {
    fn default() -> Self {
        Self {
            default_per_page: DEFAULT_PER_PAGE,
            max_per_page: DEFAULT_MAX_PER_PAGE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PageRequest {
    pub page: u32,
    pub per_page: u32,
}

impl PageRequest {
    /// Reads `page` and `per_page`; both are optional.
    pub fn parse(
        page: Option<&str>,
        per_page: Option<&str>,
        limits: &PageLimits,
        errors: &mut Vec<FieldError>,
    ) -> Self {
        let mut read = |name: &str, raw: Option<&str>, default: u32| -> u32 {
            match raw.map(str::trim).filter(|s| !s.is_empty()) {
                None => default,
                Some(s) => match s.parse::<u32>() {
                    Ok(v) => v,
                    Err(_) => {
                        errors.push(FieldError::new(name, format!("not a positive integer: {s:?}")));
                        default
                    }
                },
            }
        };
        let page = read("page", page, 1);
        let per_page = read("per_page", per_page, limits.default_per_page);
        if page < 1 {
            errors.push(FieldError::new("page", "must be >= 1"));
        }
        if per_page < 1 || per_page > limits.max_per_page {
            errors.push(FieldError::new(
                "per_page",
                format!("must be in 1..={}, got {per_page}", limits.max_per_page),
            ));
        }
        Self { page, per_page }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
pub struct Pagination {
    pub page: u32,
    pub per_page: u32,
    pub total_items: u64,
    pub total_pages: u64,
}

/// `{"items": [...], "pagination": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "openapi", derive(utoipa::ToSchema))]
pub struct PageEnvelope<T> {
    pub items: Vec<T>,
    pub pagination: Pagination,
}

impl<T> PageEnvelope<T> {
    /// Cuts one page out of an already ordered and filtered sequence.
    pub fn paginate<I>(all: I, req: PageRequest) -> Self
    where
        I: IntoIterator<Item = T>,
        I::IntoIter: ExactSizeIterator,
    {
        let iter = all.into_iter();
        let total = iter.len() as u64;
        let per_page = u64::from(req.per_page.max(1));
        let skip = u64::from(req.page.saturating_sub(1)) * per_page;
        let items = iter
            .skip(usize::try_from(skip).unwrap_or(usize::MAX))
            .take(per_page as usize)
            .collect();
        Self {
            items,
            pagination: Pagination {
                page: req.page,
                per_page: req.per_page,
                total_items: total,
                total_pages: total.div_ceil(per_page),
            },
        }
    }

    pub fn map<U>(self, f: impl FnMut(T) -> U) -> PageEnvelope<U> {
        PageEnvelope {
            items: self.items.into_iter().map(f).collect(),
            pagination: self.pagination,
        }
    }
}

/// Conjunctive dataset filters; absent fields match everything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetFilter {
    pub disease: Option<Disease>,
    pub geocode: Option<Geocode>,
    pub uf: Option<Uf>,
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetQuery {
    pub filter: DatasetFilter,
    pub page: PageRequest,
}

impl DatasetQuery {
    /// Parses query-string pairs. Unknown names, repeated names, bad values
    /// and out-of-range paging are all reported together.
    pub fn from_pairs<S: AsRef<str>>(
        kind: DatasetKind,
        pairs: &[(S, S)],
        limits: &PageLimits,
    ) -> Result<Self, ValidationErrors> {
        let mut errors = Vec::new();
        let mut filter = DatasetFilter::default();
        let mut page = None;
        let mut per_page = None;
        let mut seen = std::collections::BTreeSet::new();

        for (name, value) in pairs {
            let (name, value) = (name.as_ref(), value.as_ref().trim());
            if !seen.insert(name) {
                errors.push(FieldError::new(name, "given more than once"));
                continue;
            }
            match name {
                "page" => page = Some(value),
                "per_page" => per_page = Some(value),
                _ if !kind.filters().contains(&name) => errors.push(FieldError::new(
                    name,
                    format!("unknown filter; {} accepts {}", kind, kind.filters().join(", ")),
                )),
                _ if value.is_empty() => {}
                "disease" => match value.parse::<Disease>() {
                    Ok(d) => filter.disease = Some(d),
                    Err(e) => errors.push(FieldError::new(name, e)),
                },
                "geocode" => match value.parse::<Geocode>() {
                    Ok(g) => filter.geocode = Some(g),
                    Err(e) => errors.push(FieldError::new(name, e.to_string())),
                },
                "uf" => match Uf::parse(value) {
                    Some(uf) => filter.uf = Some(uf),
                    None => errors.push(FieldError::new(name, format!("unknown state {value:?}"))),
                },
                "start" | "end" => match parse_wire_date(value) {
                    Ok(d) if name == "start" => filter.start = Some(d),
                    Ok(d) => filter.end = Some(d),
                    Err(e) => errors.push(FieldError::new(name, e.to_string())),
                },
                _ => unreachable!("filter list and parser disagree on {name}"),
            }
        }
        if let (Some(s), Some(e)) = (filter.start, filter.end) {
            if s > e {
                errors.push(FieldError::new("start", format!("{s} is after end {e}")));
            }
        }
        let page = PageRequest::parse(page, per_page, limits, &mut errors);
        if errors.is_empty() {
            Ok(Self { filter, page })
        } else {
            Err(ValidationErrors::from(errors))
        }
    }
}
