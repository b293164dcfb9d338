//! REST backend for the tracing UI.
//!
//! Every endpoint is a thin wrapper over the session operations in
//! [`api`]; responses are compact JSON, errors are
//! `{"error": <code>, "message": <text>}`.
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | GET | `/healthz` | | `ok` |
//! | GET | `/api/sessions` | | sorted id list |
//! | GET/PUT | `/api/sessions/{id}` | session JSON | session JSON |
//! | POST | `/api/sessions/{id}/calibrate` | `{pairs, kind}` | calibration summary |
//! | POST | `/api/sessions/{id}/features` | `{id, kind, name}` | feature |
//! | POST | `/api/sessions/{id}/features/{fid}/points` | `{u, v}` | feature + warnings |
//! | POST | `/api/sessions/{id}/features/{fid}/measure?unit=` | | measurement report |
//! | POST | `/api/sessions/{id}/features/{fid}/fit` | `{n, samples}` | fit outcome |

pub mod api;
mod store;

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use cartometry::session::{parse_session, to_json, DisplayUnit};
use cartometry::Error;
use serde::Deserialize;
use tower_http::services::ServeDir;

pub use store::{validate_id, SessionStore};

use api::{CalibrateRequest, ErrorBody, FitRequest, NewFeatureRequest, PointRequest};

const INDEX_HTML: &str = "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>cartometry</title></head>\n\
<body><h1>cartometry service</h1><p>The tracing UI is not bundled with this build. \
The REST API lives under <code>/api/sessions</code>.</p></body></html>\n";

/// HTTP status for each error case.
pub fn status_for(e: &Error) -> StatusCode {
    match e {
        Error::NotFound(_) => StatusCode::NOT_FOUND,
        Error::DegenerateConfiguration(_) | Error::Uncalibrated | Error::NonInvertible(_) | Error::DuplicateId(_) => {
            StatusCode::CONFLICT
        }
        Error::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        Error::Schema { .. }
        | Error::Version(_)
        | Error::InvalidInput(_)
        | Error::DuplicatePoint(_)
        | Error::IncompleteFeature(_)
        | Error::InsufficientData(_)
        | Error::Domain(_) => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        Self(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = status_for(&self.0);
        if status.is_server_error() {
            tracing::error!(error = %self.0, "request failed");
        }
        (status, json(api::to_line(&ErrorBody::from(&self.0)))).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn json(body: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn parse_optional<T: serde::de::DeserializeOwned + Default>(body: &[u8]) -> Result<T, Error> {
    if body.iter().all(u8::is_ascii_whitespace) {
        Ok(T::default())
    } else {
        api::parse_body(body)
    }
}

type Store = Arc<SessionStore>;

async fn healthz() -> &'static str {
    "ok"
}

async fn list_sessions(State(store): State<Store>) -> ApiResult {
    Ok(json(api::to_line(&store.list()?)))
}

async fn get_session(State(store): State<Store>, Path(id): Path<String>) -> ApiResult {
    Ok(json(to_json(&store.get(&id).await?)))
}

async fn put_session(State(store): State<Store>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let text = std::str::from_utf8(&body).map_err(|e| Error::Schema {
        path: "(root)".into(),
        line: None,
        column: None,
        message: format!("body is not UTF-8: {e}"),
    })?;
    let session = parse_session(text)?;
    let canonical = to_json(&session);
    store.put(&id, session).await?;
    Ok(json(canonical))
}

async fn calibrate(State(store): State<Store>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req: CalibrateRequest = api::parse_body(&body)?;
    let summary = store.update(&id, |s| api::calibrate(s, &req)).await?;
    Ok(json(api::to_line(&summary)))
}

async fn create_feature(State(store): State<Store>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req: NewFeatureRequest = api::parse_body(&body)?;
    let feature = store.update(&id, |s| api::add_feature(s, &req)).await?;
    Ok((StatusCode::CREATED, json(api::to_line(&feature))).into_response())
}

async fn add_point(State(store): State<Store>, Path((id, fid)): Path<(String, String)>, body: Bytes) -> ApiResult {
    let req: PointRequest = api::parse_body(&body)?;
    let update = store.update(&id, |s| api::append_point(s, &fid, req)).await?;
    Ok(json(api::to_line(&update)))
}

#[derive(Deserialize)]
struct MeasureQuery {
    unit: Option<String>,
}

async fn measure(
    State(store): State<Store>,
    Path((id, fid)): Path<(String, String)>,
    Query(q): Query<MeasureQuery>,
) -> ApiResult {
    let unit = q.unit.as_deref().map(str::parse::<DisplayUnit>).transpose()?;
    let session = store.get(&id).await?;
    Ok(json(api::to_line(&api::measure(&session, &fid, unit)?)))
}

async fn fit(State(store): State<Store>, Path((id, fid)): Path<(String, String)>, body: Bytes) -> ApiResult {
    let req: FitRequest = parse_optional(&body)?;
    let session = store.get(&id).await?;
    Ok(json(api::to_line(&api::fit(&session, &fid, req)?)))
}

/// Builds the application router. Static assets come from `assets` when
/// given, otherwise a placeholder page is served at `/`.
pub fn router(store: Arc<SessionStore>, assets: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/healthz", get(healthz))
        .route("/api/sessions", get(list_sessions))
        .route("/api/sessions/{id}", get(get_session).put(put_session))
        .route("/api/sessions/{id}/calibrate", post(calibrate))
        .route("/api/sessions/{id}/features", post(create_feature))
        .route("/api/sessions/{id}/features/{fid}/points", post(add_point))
        .route("/api/sessions/{id}/features/{fid}/measure", post(measure))
        .route("/api/sessions/{id}/features/{fid}/fit", post(fit))
        .with_state(store);
    match assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(INDEX_HTML) })),
    }
}

/// Serves `app` on an already-bound listener until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let addr: Option<SocketAddr> = listener.local_addr().ok();
    tracing::info!(?addr, "listening");
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

/// Resolves on Ctrl-C, or SIGTERM on Unix.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
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
