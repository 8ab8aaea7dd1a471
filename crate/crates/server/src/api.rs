// SPDX-License-Identifier: Apache-2.0

//! HTTP routes. Each route is registered together with its entry in the API
//! description, so the two cannot drift apart.

use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, FromRequestParts, Path, Query, Request, State};
use axum::http::request::Parts;
use axum::http::{StatusCode, Uri};
use axum::middleware::{self, Next};
use axum::response::Response;
use axum::{Extension, Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use utoipa::openapi::security::{ApiKey, ApiKeyValue, SecurityScheme};
use utoipa::openapi::OpenApi as OpenApiDoc;
use utoipa::{Modify, OpenApi, ToSchema};
use utoipa_axum::router::OpenApiRouter;
use utoipa_axum::routes;

use arbohub_core::datastore::{
    CaseWeekRecord, ClimateDayRecord, DatasetKind, DatasetPage, EpidemicParamsRecord, OvitrapRecord,
    PageEnvelope,
};
use arbohub_core::domain::calendar::parse_wire_date;
use arbohub_core::domain::{spacing_warnings, validate_model_meta, validate_prediction, Account};
use arbohub_core::evaluate::{evaluate, EvaluateError, Evaluation};
use arbohub_core::scoring::ScoringError;
use arbohub_core::{
    AdmLevel, FieldError, Metric, ModelMeta, ModelRecord, PredictionRecord, ScoreReport, Uf,
    ValidationErrors,
};

use crate::auth;
use crate::error::ApiError;
use crate::registry::{ModelFilter, PredictionFilter};
use crate::params::Params;
use crate::Hub;

pub type AppState = Arc<Hub>;

const MAX_BODY_BYTES: usize = 32 * 1024 * 1024;

/// The account behind a valid `X-API-Key` header.
pub struct Caller(pub Account);

impl FromRequestParts<AppState> for Caller {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, hub: &AppState) -> Result<Self, ApiError> {
        let value = parts
            .headers
            .get(auth::HEADER)
            .ok_or_else(|| ApiError::unauthorized("missing X-API-Key header"))?;
        let token = value
            .to_str()
            .map_err(|_| ApiError::unauthorized("malformed X-API-Key header"))?;
        hub.registry
            .authenticate(token)?
            .map(Caller)
            .ok_or_else(|| ApiError::unauthorized("invalid or inactive API key"))
    }
}

fn parse_json(body: &[u8]) -> Result<Value, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::invalid_json(format!("request body is not JSON: {e}")))
}

fn parse_id(raw: &str, what: &str) -> Result<u64, ApiError> {
    raw.parse::<u64>()
        .ok()
        .filter(|&id| id > 0)
        .ok_or_else(|| ApiError::not_found(format!("no {what} {raw}")))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got {s:?}")),
    }
}

fn parse_level(s: &str) -> Result<AdmLevel, String> {
    s.parse::<i64>()
        .ok()
        .and_then(AdmLevel::from_number)
        .ok_or_else(|| format!("expected 0, 1, 2 or 3, got {s:?}"))
}

fn parse_date(s: &str) -> Result<chrono::NaiveDate, String> {
    parse_wire_date(s).map_err(|e| e.to_string())
}

/// Response to an accepted prediction upload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, ToSchema)]
pub struct PredictionCreated {
    pub id: u64,
    /// Non-fatal remarks, such as uneven weekly spacing in strict mode.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[utoipa::path(
    post,
    path = "/api/registry/models",
    tag = "registry",
    request_body = ModelMeta,
    responses(
        (status = 201, description = "Model registered", body = ModelRecord),
        (status = 401, description = "Missing or invalid API key", body = ApiError),
        (status = 422, description = "Every invalid field", body = ApiError),
    ),
    security(("api_key" = []))
)]
async fn create_model(
    State(hub): State<AppState>,
    Caller(account): Caller,
    body: Bytes,
) -> Result<(StatusCode, Json<ModelRecord>), ApiError> {
    let doc = parse_json(&body)?;
    let meta = validate_model_meta(&doc, &hub.settings.policy)?;
    let record = hub.registry.create_model(account.id, meta)?;
    tracing::info!(model = record.id, owner = account.id, "model registered");
    Ok((StatusCode::CREATED, Json(record)))
}

#[utoipa::path(
    get,
    path = "/api/registry/models",
    tag = "registry",
    params(
        ("name" = Option<String>, Query, description = "Case-insensitive substring of the name"),
        ("disease" = Option<String>, Query, description = "dengue, zika or chikungunya"),
        ("adm_level" = Option<u8>, Query, description = "0, 1, 2 or 3"),
        ("time_resolution" = Option<String>, Query, description = "day, week, month or year"),
        ("sprint" = Option<bool>, Query),
        ("page" = Option<u32>, Query, description = "1-based page, default 1"),
        ("per_page" = Option<u32>, Query, description = "Page size, default 100"),
    ),
    responses(
        (status = 200, body = PageEnvelope<ModelRecord>),
        (status = 422, body = ApiError),
    )
)]
async fn list_models(
    State(hub): State<AppState>,
    Query(pairs): Query<Vec<(String, String)>>,
) -> Result<Json<PageEnvelope<ModelRecord>>, ApiError> {
    let mut p = Params::new(
        &pairs,
        &["name", "disease", "adm_level", "time_resolution", "sprint", "page", "per_page"],
    );
    let filter = ModelFilter {
        name: p.raw("name").map(str::to_string),
        disease: p.parse("disease"),
        adm_level: p.with("adm_level", parse_level),
        time_resolution: p.parse("time_resolution"),
        sprint: p.with("sprint", parse_bool),
    };
    let page = p.page(&hub.settings.limits);
    p.finish()?;
    Ok(Json(PageEnvelope::paginate(hub.registry.models(&filter), page)))
}

#[utoipa::path(
    get,
    path = "/api/registry/models/{id}",
    tag = "registry",
    params(("id" = u64, Path, description = "Model id")),
    responses(
        (status = 200, body = ModelRecord),
        (status = 404, body = ApiError),
    )
)]
async fn get_model(
    State(hub): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<ModelRecord>, ApiError> {
    let id = parse_id(&id, "model")?;
    hub.registry
        .model(id)
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("no model {id}")))
}

#[utoipa::path(
    post,
    path = "/api/registry/predictions",
    tag = "registry",
    request_body(content = Object, description = "model, description, commit, predict_date and prediction rows"),
    responses(
        (status = 201, body = PredictionCreated),
        (status = 401, body = ApiError),
        (status = 403, description = "Model belongs to another account", body = ApiError),
        (status = 404, description = "Model not registered", body = ApiError),
        (status = 422, description = "Every invalid field, row-indexed", body = ApiError),
    ),
    security(("api_key" = []))
)]
async fn create_prediction(
    State(hub): State<AppState>,
    Caller(account): Caller,
    body: Bytes,
) -> Result<(StatusCode, Json<PredictionCreated>), ApiError> {
    let doc = parse_json(&body)?;
    let model_id = doc.get("model").and_then(Value::as_u64).filter(|&id| id > 0).ok_or_else(|| {
        ApiError::validation(ValidationErrors::single(FieldError::new(
            "model",
            "required: id of a registered model",
        )))
    })?;
    let model = hub
        .registry
        .model(model_id)
        .ok_or_else(|| ApiError::not_found(format!("model {model_id} is not registered")))?;
    if model.owner != account.id {
        return Err(ApiError::forbidden(format!(
            "model {model_id} belongs to another account"
        )));
    }
    let prediction = validate_prediction(&doc, &model, &hub.settings.policy)?;
    let warnings = if hub.settings.policy.strict_weekly_spacing {
        spacing_warnings(&prediction, &model)
    } else {
        Vec::new()
    };
    let record = hub.registry.add_prediction(prediction)?;
    tracing::info!(prediction = record.id, model = model_id, rows = record.prediction.rows.len(), "prediction stored");
    Ok((
        StatusCode::CREATED,
        Json(PredictionCreated {
            id: record.id,
            warnings,
        }),
    ))
}

#[utoipa::path(
    get,
    path = "/api/registry/predictions",
    tag = "registry",
    params(
        ("model_id" = Option<u64>, Query),
        ("disease" = Option<String>, Query, description = "Disease of the owning model"),
        ("adm_1" = Option<String>, Query, description = "UF or 2-digit state code present in the rows"),
        ("start" = Option<String>, Query, description = "YYYY-mm-dd; row dates must reach it"),
        ("end" = Option<String>, Query, description = "YYYY-mm-dd; row dates must start by it"),
        ("page" = Option<u32>, Query),
        ("per_page" = Option<u32>, Query),
    ),
    responses(
        (status = 200, body = PageEnvelope<PredictionRecord>),
        (status = 422, body = ApiError),
    )
)]
async fn list_predictions(
    State(hub): State<AppState>,
    Query(pairs): Query<Vec<(String, String)>>,
) -> Result<Json<PageEnvelope<PredictionRecord>>, ApiError> {
    let mut p = Params::new(
        &pairs,
        &["model_id", "disease", "adm_1", "start", "end", "page", "per_page"],
    );
    let filter = PredictionFilter {
        model_id: p.parse("model_id"),
        disease: p.parse("disease"),
        adm_1: p.with("adm_1", |s| Uf::parse(s).ok_or_else(|| format!("unknown state {s:?}"))),
        start: p.with("start", parse_date),
        end: p.with("end", parse_date),
    };
    let page = p.page(&hub.settings.limits);
    p.finish()?;
    Ok(Json(PageEnvelope::paginate(hub.registry.predictions(&filter), page)))
}

#[utoipa::path(
    get,
    path = "/api/registry/predictions/{id}",
    tag = "registry",
    params(("id" = u64, Path)),
    responses(
        (status = 200, body = PredictionRecord),
        (status = 404, body = ApiError),
    )
)]
async fn get_prediction(
    State(hub): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<PredictionRecord>, ApiError> {
    let id = parse_id(&id, "prediction")?;
    hub.registry
        .prediction(id)
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("no prediction {id}")))
}

#[utoipa::path(
    get,
    path = "/api/registry/predictions/{id}/score",
    tag = "scoring",
    params(
        ("id" = u64, Path),
        ("metric" = Option<String>, Query, description = "crps, log_score, mae or mse; all four when absent"),
        ("start" = Option<String>, Query, description = "YYYY-mm-dd; first row date to score"),
        ("end" = Option<String>, Query, description = "YYYY-mm-dd; last row date to score"),
    ),
    responses(
        (status = 200, body = ScoreReport),
        (status = 404, body = ApiError),
        (status = 409, description = "No prediction row matched an observation", body = ApiError),
        (status = 422, body = ApiError),
    )
)]
async fn score_prediction(
    State(hub): State<AppState>,
    Path(id): Path<String>,
    Query(pairs): Query<Vec<(String, String)>>,
) -> Result<Json<ScoreReport>, ApiError> {
    let mut p = Params::new(&pairs, &["metric", "start", "end"]);
    let metric = p.with("metric", |s| {
        Metric::parse(s).ok_or_else(|| format!("expected crps, log_score, mae or mse, got {s:?}"))
    });
    let start = p.with("start", parse_date);
    let end = p.with("end", parse_date);
    p.finish()?;

    let id = parse_id(&id, "prediction")?;
    let record = hub
        .registry
        .prediction(id)
        .ok_or_else(|| ApiError::not_found(format!("no prediction {id}")))?;
    let model = hub
        .registry
        .model(record.prediction.model)
        .ok_or_else(|| ApiError::internal(format!("prediction {id} refers to a missing model")))?;
    hub.datastore.refresh()?;
    let plan = Evaluation {
        start,
        end,
        truth: hub.settings.truth,
        metric,
        ..Evaluation::new(model.meta.disease, model.meta.adm_level)
    };
    match evaluate(&hub.datastore, Some(id), &record.prediction.rows, &plan) {
        Ok(report) => Ok(Json(report)),
        Err(EvaluateError::Scoring(e @ ScoringError::NoOverlap { .. })) => {
            Err(ApiError::conflict("no_overlap", e.to_string()))
        }
        Err(e) => Err(ApiError::conflict("not_scoreable", e.to_string())),
    }
}

#[utoipa::path(
    get,
    path = "/api/datastore/{kind}",
    tag = "datastore",
    params(
        ("kind" = DatasetKind, Path),
        ("disease" = Option<String>, Query, description = "infodengue and episcanner only"),
        ("geocode" = Option<u32>, Query, description = "7-digit municipality geocode"),
        ("uf" = Option<String>, Query, description = "UF or 2-digit state code"),
        ("start" = Option<String>, Query, description = "YYYY-mm-dd, inclusive"),
        ("end" = Option<String>, Query, description = "YYYY-mm-dd, inclusive"),
        ("page" = Option<u32>, Query, description = "1-based page, default 1"),
        ("per_page" = Option<u32>, Query, description = "Page size, default 100"),
    ),
    responses(
        (status = 200, body = DatasetPage),
        (status = 404, description = "Unknown dataset kind", body = ApiError),
        (status = 422, body = ApiError),
    )
)]
async fn query_dataset(
    State(hub): State<AppState>,
    Path(kind): Path<String>,
    Query(pairs): Query<Vec<(String, String)>>,
) -> Result<Json<DatasetPage>, ApiError> {
    let kind: DatasetKind = kind
        .parse()
        .map_err(|e: arbohub_core::datastore::IngestError| ApiError::not_found(e.to_string()))?;
    hub.datastore.refresh()?;
    Ok(Json(hub.datastore.query_pairs(kind, &pairs)?))
}

#[utoipa::path(
    get,
    path = "/api/openapi",
    tag = "meta",
    responses((status = 200, description = "This API description", body = Object))
)]
async fn openapi_document(Extension(doc): Extension<Arc<OpenApiDoc>>) -> Json<OpenApiDoc> {
    Json((*doc).clone())
}

async fn route_not_found(uri: Uri) -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "route_not_found", format!("no route for {}", uri.path()))
}

async fn method_not_allowed(uri: Uri) -> ApiError {
    ApiError::new(
        StatusCode::METHOD_NOT_ALLOWED,
        "method_not_allowed",
        format!("method not allowed on {}", uri.path()),
    )
}

/// `/api/datastore/infodengue/` routes like `/api/datastore/infodengue`.
async fn strip_trailing_slash(mut req: Request) -> Request {
    let path = req.uri().path();
    if path.len() > 1 && path.ends_with('/') {
        let trimmed = path.trim_end_matches('/');
        let rebuilt = match req.uri().query() {
            Some(q) => format!("{trimmed}?{q}"),
            None => trimmed.to_string(),
        };
        if let Ok(uri) = rebuilt.parse() {
            *req.uri_mut() = uri;
        }
    }
    req
}

async fn log_request(req: Request, next: Next) -> Response {
    let method = req.method().clone();
    let path = req.uri().path().to_string();
    let started = Instant::now();
    let response = next.run(req).await;
    tracing::info!(
        target: "arbohub::http",
        %method,
        path,
        status = response.status().as_u16(),
        latency_us = started.elapsed().as_micros() as u64,
    );
    response
}

struct ApiKeySecurity;

impl Modify for ApiKeySecurity {
    fn modify(&self, doc: &mut OpenApiDoc) {
        let components = doc.components.get_or_insert_with(Default::default);
        components.add_security_scheme(
            "api_key",
            SecurityScheme::ApiKey(ApiKey::Header(ApiKeyValue::new("X-API-Key"))),
        );
    }
}

#[derive(OpenApi)]
#[openapi(
    info(
        title = "arbohub",
        description = "Arbovirus surveillance datasets, forecast model registry and prediction scoring"
    ),
    modifiers(&ApiKeySecurity),
    components(schemas(
        FieldError,
        ValidationErrors,
        AdmLevel,
        DatasetKind,
        CaseWeekRecord,
        ClimateDayRecord,
        EpidemicParamsRecord,
        OvitrapRecord,
    )),
    tags(
        (name = "datastore", description = "Observed surveillance datasets; no key needed"),
        (name = "registry", description = "Models and predictions; writes need an API key"),
        (name = "scoring", description = "Scores of stored predictions"),
        (name = "meta", description = "This description"),
    )
)]
struct ApiDoc;

/// The HTTP application and the API description it was built with.
pub fn build(hub: AppState) -> (Router, OpenApiDoc) {
    let (routes, doc) = OpenApiRouter::<AppState>::with_openapi(ApiDoc::openapi())
        .routes(routes!(create_model, list_models))
        .routes(routes!(get_model))
        .routes(routes!(create_prediction, list_predictions))
        .routes(routes!(get_prediction))
        .routes(routes!(score_prediction))
        .routes(routes!(query_dataset))
        .routes(routes!(openapi_document))
        .split_for_parts();
    let inner = routes
        .fallback(route_not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .layer(Extension(Arc::new(doc.clone())))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(hub);
    let app = Router::new()
        .fallback_service(inner)
        .layer(middleware::map_request(strip_trailing_slash))
        .layer(middleware::from_fn(log_request));
    (app, doc)
}
