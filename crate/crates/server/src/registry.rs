// SPDX-License-Identifier: Apache-2.0

//! Models, predictions, accounts and API keys.

use std::sync::Arc;

use chrono::{NaiveDate, Utc};

use arbohub_core::domain::{Account, ApiKey, TimeResolution};
use arbohub_core::storage::{Backend, StoreError, Table};
use arbohub_core::{
    AdmLevel, Disease, ModelMeta, ModelRecord, Prediction, PredictionRecord, Uf,
};

use crate::auth::{self, MintedKey};

/// Conjunctive model listing filters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModelFilter {
    /// Case-insensitive substring of the model name.
    pub name: Option<String>,
    pub disease: Option<Disease>,
    pub adm_level: Option<AdmLevel>,
    pub time_resolution: Option<TimeResolution>,
    pub sprint: Option<bool>,
}

impl ModelFilter {
    pub fn matches(&self, m: &ModelRecord) -> bool {
        let meta = &m.meta;
        self.name
            .as_ref()
            .is_none_or(|n| meta.name.to_lowercase().contains(&n.to_lowercase()))
            && self.disease.is_none_or(|d| d == meta.disease)
            && self.adm_level.is_none_or(|l| l == meta.adm_level)
            && self.time_resolution.is_none_or(|t| t == meta.time_resolution)
            && self.sprint.is_none_or(|s| s == meta.sprint)
    }
}

/// Conjunctive prediction listing filters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PredictionFilter {
    pub model_id: Option<u64>,
    /// Disease of the owning model.
    pub disease: Option<Disease>,
    /// Keeps predictions with at least one row for this state.
    pub adm_1: Option<Uf>,
    /// Keeps predictions whose row dates intersect `[start, end]`.
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
}

impl PredictionFilter {
    fn matches(&self, p: &PredictionRecord, model_disease: Option<Disease>) -> bool {
        let pred = &p.prediction;
        let span_ok = match pred.date_span() {
            Some((first, last)) => {
                self.start.is_none_or(|s| last >= s) && self.end.is_none_or(|e| first <= e)
            }
            None => self.start.is_none() && self.end.is_none(),
        };
        self.model_id.is_none_or(|m| m == pred.model)
            && self.disease.is_none_or(|d| Some(d) == model_disease)
            && self
                .adm_1
                .is_none_or(|uf| pred.rows.iter().any(|r| r.adm_1 == Some(uf)))
            && span_ok
    }
}

#[derive(Debug)]
pub struct Registry {
    models: Table<u64, ModelRecord>,
    predictions: Table<u64, PredictionRecord>,
    accounts: Table<u64, Account>,
    keys: Table<String, ApiKey>,
}

fn next_id<V>(m: &std::collections::BTreeMap<u64, V>) -> u64 {
    m.keys().next_back().map_or(1, |k| k + 1)
}

impl Registry {
    pub fn open(backend: Arc<dyn Backend>) -> Result<Self, StoreError> {
        Ok(Self {
            models: Table::open("models", backend.clone())?,
            predictions: Table::open("predictions", backend.clone())?,
            accounts: Table::open("accounts", backend.clone())?,
            keys: Table::open("api_keys", backend)?,
        })
    }

    /// Creates an account named `name` with one active key.
    pub fn issue_key(&self, name: &str) -> Result<(Account, MintedKey), StoreError> {
        let account = self.accounts.update(|m| {
            let account = Account {
                id: next_id(m),
                name: name.to_string(),
                created_at: Utc::now(),
                active: true,
            };
            m.insert(account.id, account.clone());
            account
        })?;
        let key = self.add_key(account.id)?;
        Ok((account, key))
    }

    /// Adds a key to an existing account.
    pub fn add_key(&self, account: u64) -> Result<MintedKey, StoreError> {
        self.keys.update(|m| loop {
            let minted = auth::mint(account);
            if !m.contains_key(&minted.record.key_id) {
                m.insert(minted.record.key_id.clone(), minted.record.clone());
                break minted;
            }
        })
    }

    /// Deactivates a key. Returns false when the key id is unknown.
    pub fn revoke_key(&self, key_id: &str) -> Result<bool, StoreError> {
        self.keys.update(|m| match m.get_mut(key_id) {
            Some(k) => {
                k.active = false;
                true
            }
            None => false,
        })
    }

    pub fn account(&self, id: u64) -> Option<Account> {
        self.accounts.snapshot().get(&id).cloned()
    }

    /// The active account owning `token`, if any. Keys issued by another
    /// process since the last look are picked up.
    pub fn authenticate(&self, token: &str) -> Result<Option<Account>, StoreError> {
        let Some((key_id, secret)) = auth::split(token) else {
            return Ok(None);
        };
        self.keys.refresh()?;
        self.accounts.refresh()?;
        let Some(key) = self.keys.snapshot().get(key_id).cloned() else {
            return Ok(None);
        };
        if !auth::verify(&key, secret) {
            return Ok(None);
        }
        Ok(self.account(key.account).filter(|a| a.active))
    }

    pub fn create_model(&self, owner: u64, meta: ModelMeta) -> Result<ModelRecord, StoreError> {
        self.models.update(|m| {
            let record = ModelRecord {
                id: next_id(m),
                owner,
                meta,
            };
            m.insert(record.id, record.clone());
            record
        })
    }

    pub fn model(&self, id: u64) -> Option<ModelRecord> {
        self.models.snapshot().get(&id).cloned()
    }

    /// Matching models in id order.
    pub fn models(&self, filter: &ModelFilter) -> Vec<ModelRecord> {
        self.models
            .snapshot()
            .values()
            .filter(|m| filter.matches(m))
            .cloned()
            .collect()
    }

    pub fn add_prediction(&self, prediction: Prediction) -> Result<PredictionRecord, StoreError> {
        self.predictions.update(|m| {
            let record = PredictionRecord {
                id: next_id(m),
                prediction,
            };
            m.insert(record.id, record.clone());
            record
        })
    }

    pub fn prediction(&self, id: u64) -> Option<PredictionRecord> {
        self.predictions.snapshot().get(&id).cloned()
    }

    /// Matching predictions in id order.
    pub fn predictions(&self, filter: &PredictionFilter) -> Vec<PredictionRecord> {
        let models = self.models.snapshot();
        self.predictions
            .snapshot()
            .values()
            .filter(|p| filter.matches(p, models.get(&p.prediction.model).map(|m| m.meta.disease)))
            .cloned()
            .collect()
    }
}
