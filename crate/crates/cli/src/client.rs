// SPDX-License-Identifier: Apache-2.0

//! Thin JSON client for the hub API.

use std::time::Duration;

use futures::stream::{self, StreamExt, TryStreamExt};
use reqwest::{Client, Method, RequestBuilder, StatusCode};
use serde_json::Value;
use url::Url;

use arbohub_core::datastore::DatasetKind;
use arbohub_core::ModelRecord;

use crate::config::ClientConfig;
use crate::error::{CliError, ServerError};

/// Pages requested concurrently after the first one.
pub const PAGES_IN_FLIGHT: usize = 4;

const KEY_HEADER: &str = "x-api-key";

#[derive(Debug, Clone)]
pub struct HubClient {
    http: Client,
    config: ClientConfig,
}

impl HubClient {
    pub fn new(config: ClientConfig) -> Result<Self, CliError> {
        let http = Client::builder()
            .timeout(config.timeout)
            .user_agent(concat!("arbohub/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| CliError::Network(e.to_string()))?;
        Ok(Self { http, config })
    }

    pub fn config(&self) -> &ClientConfig {
        &self.config
    }

    fn url(&self, path: &str) -> Url {
        let mut base = self.config.api_url.clone();
        if !base.path().ends_with('/') {
            let p = format!("{}/", base.path());
            base.set_path(&p);
        }
        base.join(path.trim_start_matches('/')).expect("relative API path")
    }

    fn key(&self) -> Result<&str, CliError> {
        self.config.api_key.as_deref().ok_or_else(|| {
            CliError::Invalid(
                "this command needs an API key: pass --api-key, set ARBOHUB_API_KEY or add api_key to the config file"
                    .into(),
            )
        })
    }

    /// Sends with retries. Idempotent requests retry on any transport
    /// failure or 5xx; others only when the connection was never made.
    async fn send(
        &self,
        method: Method,
        path: &str,
        build: impl Fn(RequestBuilder) -> RequestBuilder,
    ) -> Result<Value, CliError> {
        let idempotent = method == Method::GET;
        let url = self.url(path);
        let mut attempt = 0u32;
        loop {
            let req = build(self.http.request(method.clone(), url.clone()));
            let retry_left = attempt < self.config.retries;
            match req.send().await {
                Ok(res) if res.status().is_server_error() && idempotent && retry_left => {}
                Ok(res) => return read_response(res).await,
                Err(e) if retry_left && (idempotent || e.is_connect()) => {}
                Err(e) => return Err(CliError::Network(format!("{method} {url}: {e}"))),
            }
            tokio::time::sleep(Duration::from_millis(200 << attempt.min(6))).await;
            attempt += 1;
        }
    }

    pub async fn get_json(&self, path: &str, query: &[(String, String)]) -> Result<Value, CliError> {
        self.send(Method::GET, path, |r| r.query(query)).await
    }

    pub async fn post_json(&self, path: &str, body: &Value) -> Result<Value, CliError> {
        let key = self.key()?.to_string();
        self.send(Method::POST, path, |r| r.header(KEY_HEADER, &key).json(body))
            .await
    }

    pub async fn model(&self, id: u64) -> Result<ModelRecord, CliError> {
        let v = self.get_json(&format!("api/registry/models/{id}"), &[]).await?;
        serde_json::from_value(v).map_err(|e| CliError::Network(format!("unexpected model document: {e}")))
    }

    /// Fetches every page of `kind` and hands each page's items to `sink` in
    /// page order. Returns the number of items seen.
    pub async fn fetch(
        &self,
        kind: DatasetKind,
        filters: &[(String, String)],
        per_page: Option<u32>,
        mut sink: impl FnMut(Vec<Value>) -> Result<(), CliError>,
    ) -> Result<u64, CliError> {
        let path = format!("api/datastore/{kind}");
        let query = |page: u64| {
            let mut q = filters.to_vec();
            q.push(("page".into(), page.to_string()));
            if let Some(n) = per_page {
                q.push(("per_page".into(), n.to_string()));
            }
            q
        };
        let first = self.get_json(&path, &query(1)).await?;
        let total_pages = first["pagination"]["total_pages"].as_u64().ok_or_else(|| {
            CliError::Network("page without pagination.total_pages".into())
        })?;
        let mut count = 0u64;
        let mut take = |page: Value| -> Result<(), CliError> {
            let items = match page {
                Value::Object(mut m) => m.remove("items"),
                _ => None,
            };
            let Some(Value::Array(items)) = items else {
                return Err(CliError::Network("page without an items array".into()));
            };
            count += items.len() as u64;
            sink(items)
        };
        take(first)?;
        let mut rest = stream::iter(2..=total_pages)
            .map(|p| {
                let q = query(p);
                let path = path.clone();
                async move { self.get_json(&path, &q).await }
            })
            .buffered(PAGES_IN_FLIGHT);
        while let Some(page) = rest.try_next().await? {
            take(page)?;
        }
        Ok(count)
    }
}

async fn read_response(res: reqwest::Response) -> Result<Value, CliError> {
    let status = res.status();
    let bytes = res
        .bytes()
        .await
        .map_err(|e| CliError::Network(format!("reading response: {e}")))?;
    if status.is_success() {
        return serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Network(format!("response is not JSON: {e}")));
    }
    let body = serde_json::from_slice::<ServerError>(&bytes).unwrap_or_else(|_| ServerError {
        status: status.as_u16(),
        message: fallback_message(status, &bytes),
        ..ServerError::default()
    });
    Err(CliError::Server {
        status: status.as_u16(),
        body,
    })
}

fn fallback_message(status: StatusCode, bytes: &[u8]) -> String {
    let text = String::from_utf8_lossy(bytes);
    let text = text.trim();
    if text.is_empty() {
        status.canonical_reason().unwrap_or("error").to_string()
    } else {
        text.chars().take(500).collect()
    }
}
