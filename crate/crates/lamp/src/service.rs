//! JSON-over-HTTP front end.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use lamp_core::policy::PolicyId;
use serde::Deserialize;
use serde_json::json;

use crate::engine::{parse_face_record, parse_manifest, Engine, EngineError, ErrorKind};

pub struct ApiError(EngineError);

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.0.kind() {
            ErrorKind::Invalid => StatusCode::BAD_REQUEST,
            ErrorKind::NotFound => StatusCode::NOT_FOUND,
            ErrorKind::Conflict => StatusCode::CONFLICT,
            ErrorKind::Io => StatusCode::INTERNAL_SERVER_ERROR,
            ErrorKind::Redactor => StatusCode::BAD_GATEWAY,
        };
        let mut body = json!({ "error": self.0.code(), "message": self.0.to_string() });
        if let EngineError::RedactorFailure { decisions, .. } = &self.0 {
            body["decisions"] = json!(decisions);
        }
        (status, Json(body)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn utf8<'a>(body: &'a Bytes, code: &'static str) -> Result<&'a str, ApiError> {
    std::str::from_utf8(body).map_err(|e| ApiError(EngineError::Malformed { code, message: e.to_string() }))
}

/// Accepts `7` or `P7`.
fn parse_pid(s: &str) -> Result<PolicyId, ApiError> {
    let digits = s.strip_prefix(['P', 'p']).unwrap_or(s);
    digits
        .parse()
        .map(PolicyId)
        .map_err(|_| ApiError(EngineError::Malformed { code: "MalformedPolicyId", message: format!("bad policy id {s:?}") }))
}

async fn add_policy(State(engine): State<Arc<Engine>>, body: Bytes) -> ApiResult {
    let pid = engine.add_policy_json(utf8(&body, "MalformedPolicy")?)?;
    Ok((StatusCode::CREATED, Json(json!({ "pid": pid }))).into_response())
}

async fn remove_policy(State(engine): State<Arc<Engine>>, Path(pid): Path<String>) -> ApiResult {
    let removed = engine.remove_policy(parse_pid(&pid)?)?;
    Ok(Json(json!({ "removed": removed.pid })).into_response())
}

#[derive(Deserialize)]
struct OwnerQuery {
    owner: Option<String>,
}

async fn list_policies(State(engine): State<Arc<Engine>>, Query(q): Query<OwnerQuery>) -> ApiResult {
    Ok(Json(engine.policies(q.owner.as_deref())).into_response())
}

async fn enroll(State(engine): State<Arc<Engine>>, body: Bytes) -> ApiResult {
    let record = parse_face_record(utf8(&body, "MalformedFaceRecord")?)?;
    let user = record.user.clone();
    engine.enroll(record)?;
    Ok((StatusCode::CREATED, Json(json!({ "user": user }))).into_response())
}

async fn check(State(engine): State<Arc<Engine>>, body: Bytes) -> ApiResult {
    let m = parse_manifest(utf8(&body, "MalformedManifest")?)?;
    let outcome = tokio::task::spawn_blocking(move || engine.check(&m)).await.expect("check task panicked")?;
    Ok(Json(outcome).into_response())
}

async fn enforce(State(engine): State<Arc<Engine>>, body: Bytes) -> ApiResult {
    let m = parse_manifest(utf8(&body, "MalformedManifest")?)?;
    let report = tokio::task::spawn_blocking(move || engine.enforce(&m)).await.expect("enforce task panicked")?;
    Ok(Json(report).into_response())
}

async fn healthz(State(engine): State<Arc<Engine>>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "policies": engine.policy_count(), "faces": engine.face_count() }))
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/policies", post(add_policy).get(list_policies))
        .route("/policies/{pid}", delete(remove_policy))
        .route("/enroll", post(enroll))
        .route("/check", post(check))
        .route("/enforce", post(enforce))
        .route("/healthz", get(healthz))
        .with_state(engine)
}

/// Serve until Ctrl-C.
pub async fn serve(engine: Arc<Engine>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(engine))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
