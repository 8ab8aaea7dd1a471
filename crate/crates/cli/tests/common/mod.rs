// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use std::io::Cursor;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Value};
use url::Url;

use arbohub::{ClientConfig, HubClient};
use arbohub_core::datastore::{DatasetKind, IngestOptions};
use arbohub_server::{Hub, Settings};
use arbohub_testkit::calendar::week_starts;
use arbohub_testkit::fixtures::{case_weeks, infodengue_csv, MG_TOWNS};

pub struct Running {
    pub hub: Arc<Hub>,
    pub addr: SocketAddr,
    pub token: String,
}

/// Serves an in-memory hub on an ephemeral port of the current runtime.
pub async fn start() -> Running {
    let hub = Arc::new(Hub::in_memory(Settings::default()));
    let (_, key) = hub.registry.issue_key("tester").unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(arbohub_server::serve(listener, hub.clone()));
    Running {
        hub,
        addr,
        token: key.token,
    }
}

impl Running {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn client(&self, key: Option<&str>) -> HubClient {
        HubClient::new(ClientConfig {
            api_url: Url::parse(&self.url()).unwrap(),
            api_key: key.map(String::from),
            timeout: Duration::from_secs(10),
            retries: 0,
        })
        .unwrap()
    }

    pub fn authed(&self) -> HubClient {
        self.client(Some(&self.token))
    }

    pub fn ingest(&self, kind: DatasetKind, csv: &str) {
        self.hub
            .datastore
            .ingest(kind, Cursor::new(csv.to_string()), &IngestOptions::default())
            .unwrap();
    }
}

pub fn model_doc(adm_level: u8) -> Value {
    json!({
        "name": format!("model adm {adm_level}"),
        "description": "test model",
        "repository": "https://github.com/example/model",
        "implementation_language": "Python",
        "disease": "dengue",
        "temporal": true,
        "spatial": adm_level > 1,
        "categorical": false,
        "adm_level": adm_level,
        "time_resolution": "week",
        "sprint": false
    })
}

/// Eight weeks of MG dengue from 2024-01-07; `casos = f(week, town)`.
pub fn mg_observed(f: impl Fn(usize, usize) -> u64) -> String {
    infodengue_csv(&case_weeks((2024, 1, 7), 8, &MG_TOWNS, "dengue", f))
}

pub fn mg_truth(w: usize, t: usize) -> u64 {
    (10 * w + t + 5) as u64
}

/// State totals of [`mg_truth`] as rows with pred equal to the truth and a
/// ±2 interval.
pub fn perfect_state_rows() -> Vec<(String, f64, f64, f64)> {
    week_starts((2024, 1, 7), 8)
        .into_iter()
        .enumerate()
        .map(|(w, (date, _))| {
            let total: u64 = (0..MG_TOWNS.len()).map(|t| mg_truth(w, t)).sum();
            let total = total as f64;
            (date, total, total - 2.0, total + 2.0)
        })
        .collect()
}

pub fn rows_csv(rows: &[(String, f64, f64, f64)], adm_1: &str) -> String {
    let mut s = String::from("date,pred,lower,upper,adm_1\n");
    for (d, p, l, u) in rows {
        s.push_str(&format!("{d},{p},{l},{u},{adm_1}\n"));
    }
    s
}

/// A TCP port that accepts nothing but remembers whether anyone knocked.
pub struct Tripwire {
    listener: std::net::TcpListener,
}

impl Tripwire {
    pub fn new() -> Self {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        listener.set_nonblocking(true).unwrap();
        Self { listener }
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.listener.local_addr().unwrap())
    }

    pub fn was_contacted(&self) -> bool {
        self.listener.accept().is_ok()
    }
}
