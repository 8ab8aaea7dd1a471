// SPDX-License-Identifier: Apache-2.0

//! HTTP service of the arbovirus forecast hub.
//!
//! Dataset reads and registry reads are public. Registering models and
//! uploading predictions need an `X-API-Key` issued with the admin command.

pub mod api;
pub mod auth;
pub mod error;
mod params;
pub mod registry;

use std::path::Path;
use std::sync::Arc;

use arbohub_core::datastore::{PageLimits, TruthColumn};
use arbohub_core::storage::{Backend, FileBackend, MemoryBackend, StoreError};
use arbohub_core::{Datastore, ValidationPolicy};
use axum::Router;
use tokio::net::TcpListener;

pub use api::{build, AppState, PredictionCreated};
pub use error::ApiError;
pub use registry::Registry;

/// Tunables of a running hub.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    pub policy: ValidationPolicy,
    pub limits: PageLimits,
    /// Case count used as ground truth when scoring.
    pub truth: TruthColumn,
}

/// Everything the handlers share.
#[derive(Debug)]
pub struct Hub {
    pub datastore: Datastore,
    pub registry: Registry,
    pub settings: Settings,
}

impl Hub {
    pub fn with_backend(backend: Arc<dyn Backend>, settings: Settings) -> Result<Self, StoreError> {
        Ok(Self {
            datastore: Datastore::open(backend.clone(), settings.limits)?,
            registry: Registry::open(backend)?,
            settings,
        })
    }

    /// A hub persisted under `dir`.
    pub fn open(dir: &Path, settings: Settings) -> Result<Self, StoreError> {
        let backend = FileBackend::open(dir).map_err(|source| StoreError::Io {
            partition: dir.display().to_string(),
            source,
        })?;
        Self::with_backend(Arc::new(backend), settings)
    }

    /// A hub that forgets everything on drop.
    pub fn in_memory(settings: Settings) -> Self {
        Self::with_backend(Arc::new(MemoryBackend), settings).expect("memory backend")
    }
}

pub fn app(hub: Arc<Hub>) -> Router {
    build(hub).0
}

/// Serves until ctrl-c or SIGTERM.
pub async fn serve(listener: TcpListener, hub: Arc<Hub>) -> std::io::Result<()> {
    axum::serve(listener, app(hub))
        .with_graceful_shutdown(shutdown_signal())
        .await
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        if let Ok(mut s) = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            s.recv().await;
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    tracing::info!("shutting down");
}
