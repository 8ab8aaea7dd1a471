// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use std::io::Cursor;
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

use arbohub_core::datastore::{DatasetKind, IngestOptions};
use arbohub_server::{app, Hub, Settings};
use arbohub_testkit::calendar::week_starts;
use arbohub_testkit::fixtures::{case_weeks, infodengue_csv, MG_TOWNS};

pub struct TestHub {
    pub hub: Arc<Hub>,
    pub router: Router,
    pub token: String,
}

pub struct Reply {
    pub status: StatusCode,
    pub body: Value,
}

impl TestHub {
    pub fn new() -> Self {
        Self::with_settings(Settings::default())
    }

    pub fn with_settings(settings: Settings) -> Self {
        let hub = Arc::new(Hub::in_memory(settings));
        let (_, key) = hub.registry.issue_key("tester").unwrap();
        Self {
            router: app(hub.clone()),
            hub,
            token: key.token,
        }
    }

    pub fn second_token(&self) -> String {
        self.hub.registry.issue_key("someone else").unwrap().1.token
    }

    pub async fn send(&self, method: Method, uri: &str, key: Option<&str>, body: Option<String>) -> Reply {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(k) = key {
            req = req.header("x-api-key", k);
        }
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(b))
                .unwrap(),
            None => req.body(Body::empty()).unwrap(),
        };
        let res = self.router.clone().oneshot(req).await.unwrap();
        let status = res.status();
        let bytes = to_bytes(res.into_body(), usize::MAX).await.unwrap();
        let body = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
        };
        Reply { status, body }
    }

    pub async fn get(&self, uri: &str) -> Reply {
        self.send(Method::GET, uri, None, None).await
    }

    pub async fn post(&self, uri: &str, body: &Value) -> Reply {
        self.send(Method::POST, uri, Some(&self.token.clone()), Some(body.to_string()))
            .await
    }

    /// Registers a weekly dengue state model and returns its id.
    pub async fn state_model(&self) -> u64 {
        let r = self.post("/api/registry/models", &model_body()).await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.body);
        r.body["id"].as_u64().unwrap()
    }

    /// Eight weeks of MG dengue cases from 2024-01-07 for three towns, with
    /// `casos = 10 * week + town + 5`.
    pub fn ingest_mg(&self) {
        let rows = case_weeks((2024, 1, 7), 8, &MG_TOWNS, "dengue", |w, t| (10 * w + t + 5) as u64);
        self.hub
            .datastore
            .ingest(
                DatasetKind::Infodengue,
                Cursor::new(infodengue_csv(&rows)),
                &IngestOptions::default(),
            )
            .unwrap();
    }
}

pub fn model_body() -> Value {
    json!({
        "name": "BB-M",
        "description": "Bayesian state model",
        "repository": "https://github.com/example/bbm",
        "implementation_language": "R",
        "disease": "dengue",
        "temporal": true,
        "spatial": false,
        "categorical": false,
        "adm_level": 1,
        "time_resolution": "week",
        "sprint": true
    })
}

/// State totals of [`TestHub::ingest_mg`] with `pred` equal to the truth and
/// a ±2 interval, so sigma is 1.
pub fn perfect_rows() -> Vec<(String, f64, f64, f64)> {
    week_starts((2024, 1, 7), 8)
        .into_iter()
        .enumerate()
        .map(|(w, (date, _))| {
            let total = (30 * w + 18) as f64;
            (date, total, total - 2.0, total + 2.0)
        })
        .collect()
}

pub fn fields(body: &Value) -> Vec<String> {
    body["details"]
        .as_array()
        .map(|d| d.iter().map(|e| e["field"].as_str().unwrap().to_string()).collect())
        .unwrap_or_default()
}
