// SPDX-License-Identifier: Apache-2.0

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{Map, Value};

use arbohub_core::datastore::DatasetKind;
use arbohub_core::domain::{validate_model_meta, validate_prediction};
use arbohub_core::{ModelRecord, ValidationPolicy};

use crate::client::HubClient;
use crate::error::CliError;
use crate::output::{Format, ItemWriter};
use crate::rows::precheck;

/// Where fetched items go.
pub enum Destination<'a> {
    File(&'a Path),
    Stdout(Format),
}

/// Downloads every matching item of `kind`. Returns the item count.
pub async fn fetch(
    client: &HubClient,
    kind: DatasetKind,
    filters: &[(String, String)],
    per_page: Option<u32>,
    dest: Destination<'_>,
) -> Result<u64, CliError> {
    match dest {
        Destination::Stdout(format) => {
            let out = BufWriter::new(std::io::stdout().lock());
            let mut w = ItemWriter::begin(format, kind, out)?;
            let n = client
                .fetch(kind, filters, per_page, |items| items.iter().try_for_each(|i| w.push(i)))
                .await?;
            w.finish()?.flush().map_err(|e| CliError::Invalid(e.to_string()))?;
            Ok(n)
        }
        Destination::File(path) => {
            let file = File::create(path)
                .map_err(|e| CliError::Invalid(format!("cannot create {}: {e}", path.display())))?;
            let result = async {
                let mut w = ItemWriter::begin(Format::for_path(path), kind, BufWriter::new(file))?;
                let n = client
                    .fetch(kind, filters, per_page, |items| items.iter().try_for_each(|i| w.push(i)))
                    .await?;
                w.finish()?
                    .into_inner()
                    .map_err(|e| CliError::Invalid(e.to_string()))?
                    .sync_all()
                    .map_err(|e| CliError::Invalid(e.to_string()))?;
                Ok(n)
            }
            .await;
            if result.is_err() {
                let _ = std::fs::remove_file(path);
            }
            result
        }
    }
}

/// Model metadata from an optional JSON file with flag values laid over it.
pub fn model_document(file: Option<&Path>, overrides: Map<String, Value>) -> Result<Value, CliError> {
    let mut doc = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", p.display())))?;
            match serde_json::from_str(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => return Err(CliError::Invalid(format!("{}: must hold a JSON object", p.display()))),
                Err(e) => return Err(CliError::Invalid(format!("{}: not JSON: {e}", p.display()))),
            }
        }
        None => Map::new(),
    };
    doc.extend(overrides);
    Ok(Value::Object(doc))
}

/// Validates locally, then registers. Nothing is sent when validation fails.
pub async fn register_model(client: &HubClient, doc: &Value) -> Result<ModelRecord, CliError> {
    validate_model_meta(doc, &ValidationPolicy::default())?;
    let created = client.post_json("api/registry/models", doc).await?;
    serde_json::from_value(created).map_err(|e| CliError::Network(format!("unexpected reply: {e}")))
}

/// Server answer to an accepted upload.
#[derive(Debug, Clone, PartialEq, serde::Deserialize)]
pub struct Uploaded {
    pub id: u64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Checks the document twice before sending it: first with no model at
/// hand, then against the model fetched from the hub.
pub async fn upload_prediction(client: &HubClient, doc: &Value) -> Result<Uploaded, CliError> {
    let policy = ValidationPolicy::default();
    precheck(doc, &policy)?;
    client.config().api_key.as_ref().ok_or_else(|| {
        CliError::Invalid(
            "uploading needs an API key: pass --api-key, set ARBOHUB_API_KEY or add api_key to the config file"
                .into(),
        )
    })?;
    let model_id = doc["model"].as_u64().expect("checked by precheck");
    let model = client.model(model_id).await?;
    validate_prediction(doc, &model, &policy)?;
    let created = client.post_json("api/registry/predictions", doc).await?;
    serde_json::from_value(created).map_err(|e| CliError::Network(format!("unexpected reply: {e}")))
}
