//! JSON-over-HTTP front end for [`Corrector`].
//!
//! | route               | success                | failure            |
//! |---------------------|------------------------|--------------------|
//! | `GET /v1/correct?q=`| 200 `CorrectionResponse` | 400 on empty `q` |
//! | `POST /v1/reload`   | 200 `{"table_version"}`| 409 on bad snapshot|
//! | `GET /healthz`      | 200 when a table is loaded | 503           |
//! | `GET /v1/stats`     | 200 `StatsSnapshot`    |                    |

use std::collections::HashMap;
use std::future::Future;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tokio::net::TcpListener;

use super::Corrector;

pub fn router(corrector: Arc<Corrector>) -> Router {
    Router::new()
        .route("/v1/correct", get(correct))
        .route("/v1/reload", post(reload))
        .route("/v1/stats", get(stats))
        .route("/healthz", get(healthz))
        .with_state(corrector)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    corrector: Arc<Corrector>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(corrector))
        .with_graceful_shutdown(shutdown)
        .await
}

fn error(status: StatusCode, message: impl ToString) -> Response {
    (status, Json(json!({ "error": message.to_string() }))).into_response()
}

async fn correct(
    State(corrector): State<Arc<Corrector>>,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    let q = params.get("q").map(String::as_str).unwrap_or("");
    match corrector.correct(q) {
        Ok(resp) => Json(resp).into_response(),
        Err(e) => error(StatusCode::BAD_REQUEST, e),
    }
}

#[derive(Deserialize)]
struct ReloadRequest {
    path: PathBuf,
}

async fn reload(State(corrector): State<Arc<Corrector>>, Json(req): Json<ReloadRequest>) -> Response {
    let result = tokio::task::spawn_blocking(move || corrector.reload(&req.path)).await;
    match result {
        Ok(Ok(tag)) => Json(json!({ "table_version": tag })).into_response(),
        Ok(Err(e)) => error(StatusCode::CONFLICT, e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

async fn stats(State(corrector): State<Arc<Corrector>>) -> Response {
    Json(corrector.stats()).into_response()
}

async fn healthz(State(corrector): State<Arc<Corrector>>) -> Response {
    match corrector.table() {
        Some(t) => Json(json!({ "status": "ok", "table_version": t.version_tag(), "entries": t.len() }))
            .into_response(),
        None => error(StatusCode::SERVICE_UNAVAILABLE, "no table loaded"),
    }
}
