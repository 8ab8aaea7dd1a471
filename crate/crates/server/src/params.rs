// SPDX-License-Identifier: Apache-2.0

//! Query-string checking shared by the listing routes.

use std::collections::BTreeSet;
use std::str::FromStr;

use arbohub_core::datastore::{PageLimits, PageRequest};
use arbohub_core::{FieldError, ValidationErrors};

/// Query pairs checked against a fixed set of names. Unknown or repeated
/// names and unparsable values are collected, not returned one by one.
pub struct Params<'a> {
    pairs: &'a [(String, String)],
    errors: Vec<FieldError>,
}

impl<'a> Params<'a> {
    pub fn new(pairs: &'a [(String, String)], allowed: &[&str]) -> Self {
        let mut errors = Vec::new();
        let mut seen = BTreeSet::new();
        for (name, _) in pairs {
            if !allowed.contains(&name.as_str()) {
                errors.push(FieldError::new(
                    name,
                    format!("unknown parameter; accepted: {}", allowed.join(", ")),
                ));
            } else if !seen.insert(name.as_str()) {
                errors.push(FieldError::new(name, "given more than once"));
            }
        }
        Self { pairs, errors }
    }

    /// Trimmed value of `name`; empty counts as absent.
    pub fn raw(&self, name: &str) -> Option<&'a str> {
        self.pairs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.trim())
            .filter(|v| !v.is_empty())
    }

    pub fn with<T>(&mut self, name: &str, f: impl FnOnce(&str) -> Result<T, String>) -> Option<T> {
        let raw = self.raw(name)?;
        match f(raw) {
            Ok(v) => Some(v),
            Err(reason) => {
                self.errors.push(FieldError::new(name, reason));
                None
            }
        }
    }

    pub fn parse<T: FromStr>(&mut self, name: &str) -> Option<T>
    where
        T::Err: ToString,
    {
        self.with(name, |s| s.parse().map_err(|e: T::Err| e.to_string()))
    }

    pub fn page(&mut self, limits: &PageLimits) -> PageRequest {
        PageRequest::parse(self.raw("page"), self.raw("per_page"), limits, &mut self.errors)
    }

    pub fn finish(self) -> Result<(), ValidationErrors> {
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(ValidationErrors::from(self.errors))
        }
    }
}
