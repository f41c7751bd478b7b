//! Local JSON API over the engine.
//!
//! Every number in a response comes straight from the core crate; this
//! module only routes requests and maps errors to status codes.

use std::sync::{Arc, Mutex, MutexGuard};

use argverify_core::annotator::CompletionClient;
use argverify_core::explain::{explain_argument_with, Edit, DEFAULT_SNIPPET_LEN};
use argverify_core::pipeline::{verify, PipelineConfig};
use argverify_core::retrieval::Retriever;
use argverify_core::{Error, Qbaf, Semantics, SolverParams};
use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::session::SessionStore;

pub struct AppState {
    pub pipeline: PipelineConfig,
    pub retriever: Option<Arc<dyn Retriever>>,
    pub client: Option<Arc<dyn CompletionClient>>,
    pub store: Mutex<SessionStore>,
}

impl AppState {
    fn store(&self) -> MutexGuard<'_, SessionStore> {
        self.store.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: String,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            status,
            kind: kind.into(),
            message: message.into(),
        }
    }

    fn engine(status: StatusCode, e: Error) -> Self {
        Self::new(status, e.kind(), e.to_string())
    }

    fn no_session(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "UnknownSession",
            format!("no session `{id}`"),
        )
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"kind": self.kind, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "SchemaError", e.to_string()))
}

/// Validation problems in a request are the client's fault; failures of
/// the annotator backend are reported as a bad gateway.
fn verify_status(e: &Error) -> StatusCode {
    match e {
        Error::Client { .. }
        | Error::MissingFixture(_)
        | Error::MalformedResponse(_)
        | Error::AnnotationMismatch(_) => StatusCode::BAD_GATEWAY,
        Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    }
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> T + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| {
        ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "InternalError",
            e.to_string(),
        )
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyRequest {
    claim: String,
    claim_id: Option<String>,
}

async fn post_verify(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let req: VerifyRequest = parse_body(&body)?;
    let (Some(retriever), Some(client)) = (state.retriever.clone(), state.client.clone()) else {
        return Err(ApiError::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "NotConfigured",
            "server was started without a corpus or annotator",
        ));
    };
    let st = state.clone();
    blocking(move || {
        let cfg = st.pipeline;
        let record = verify(
            req.claim_id.as_deref(),
            &req.claim,
            retriever.as_ref(),
            &cfg,
            client.as_ref(),
        )
        .map_err(|e| ApiError::engine(verify_status(&e), e))?;
        let mut store = st.store();
        let session = store
            .create(
                record.qbaf.clone(),
                cfg.semantics,
                cfg.solver,
                cfg.tau,
                Some(record.clone()),
            )
            .map_err(|e| ApiError::engine(StatusCode::INTERNAL_SERVER_ERROR, e))?;
        Ok(Json(json!({"session_id": session.id(), "record": record})))
    })
    .await?
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    qbaf: Value,
    semantics: Option<Semantics>,
    solver: Option<SolverParams>,
    tau: Option<f64>,
}

async fn post_session(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let req: CreateRequest = parse_body(&body)?;
    let qbaf =
        Qbaf::from_value(&req.qbaf).map_err(|e| ApiError::engine(StatusCode::BAD_REQUEST, e))?;
    let semantics = req.semantics.unwrap_or(state.pipeline.semantics);
    let solver = req.solver.unwrap_or(state.pipeline.solver);
    solver
        .validate()
        .map_err(|e| ApiError::engine(StatusCode::BAD_REQUEST, e))?;
    let tau = req.tau.unwrap_or(state.pipeline.tau);
    let st = state.clone();
    blocking(move || {
        let mut store = st.store();
        let s = store
            .create(qbaf, semantics, solver, tau, None)
            .map_err(|e| ApiError::engine(StatusCode::BAD_REQUEST, e))?;
        Ok(Json(s.view()))
    })
    .await?
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let store = state.store();
    let s = store.get(&id).ok_or_else(|| ApiError::no_session(&id))?;
    Ok(Json(s.view()))
}

/// A single edit object, or `{"edits": [...]}`.
#[derive(Deserialize)]
#[serde(untagged)]
enum ContestRequest {
    Many { edits: Vec<Edit> },
    One(Edit),
}

async fn post_contest(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult {
    let edits = match parse_body::<ContestRequest>(&body)? {
        ContestRequest::Many { edits } => edits,
        ContestRequest::One(e) => vec![e],
    };
    let st = state.clone();
    blocking(move || {
        let mut store = st.store();
        match store.contest(&id, &edits) {
            None => Err(ApiError::no_session(&id)),
            Some(Err(Error::Io(e))) => Err(ApiError::engine(
                StatusCode::INTERNAL_SERVER_ERROR,
                e.into(),
            )),
            Some(Err(e)) => Err(ApiError::engine(StatusCode::UNPROCESSABLE_ENTITY, e)),
            Some(Ok(report)) => Ok(Json(
                serde_json::to_value(report).expect("report serializes"),
            )),
        }
    })
    .await?
}

#[derive(Deserialize)]
struct ExplainQuery {
    snippet: Option<usize>,
}

async fn get_explain(
    State(state): State<Arc<AppState>>,
    Path((id, arg)): Path<(String, String)>,
    Query(q): Query<ExplainQuery>,
) -> ApiResult {
    let store = state.store();
    let s = store.get(&id).ok_or_else(|| ApiError::no_session(&id))?;
    let e = explain_argument_with(
        &s.qbaf,
        &s.result,
        &arg,
        q.snippet.unwrap_or(DEFAULT_SNIPPET_LEN),
    )
    .map_err(|e| match e {
        Error::UnknownId(_) => ApiError::engine(StatusCode::NOT_FOUND, e),
        other => ApiError::engine(StatusCode::UNPROCESSABLE_ENTITY, other),
    })?;
    Ok(Json(
        serde_json::to_value(e).expect("explanation serializes"),
    ))
}

async fn health() -> Json<Value> {
    Json(json!({"status": "ok"}))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/verify", post(post_verify))
        .route("/sessions", post(post_session))
        .route("/session/{id}", get(get_session))
        .route("/session/{id}/contest", post(post_contest))
        .route("/session/{id}/explain/{arg}", get(get_explain))
        .with_state(state)
}
