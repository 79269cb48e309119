//! Stateless JSON service. Every request carries its whole scenario.

use axum::extract::rejection::JsonRejection;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;

use isacfeas::shell::api::{
    evaluate_request, heatmap_request, sweep_request, to_json, use_cases, ApiError, EvaluateRequest, HeatmapRequest,
    SweepRequest,
};

pub fn router() -> Router {
    Router::new()
        .route("/use-cases", get(|| async { json_ok(to_json(&use_cases())) }))
        .route("/evaluate", post(evaluate))
        .route("/heatmap", post(heatmap))
        .route("/sweep", post(sweep))
        .route("/healthz", get(|| async { "ok\n" }))
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn json_ok(body: String) -> Response {
    json_response(StatusCode::OK, body)
}

fn api_error(e: ApiError) -> Response {
    let body = match &e {
        ApiError::Invalid(c) => json!({ "error": "invalid scenario", "problems": c.problems }),
        ApiError::BadRequest(m) => json!({ "error": m }),
    };
    json_response(StatusCode::UNPROCESSABLE_ENTITY, to_json(&body))
}

fn bad_body(e: JsonRejection) -> Response {
    json_response(e.status(), to_json(&json!({ "error": e.body_text() })))
}

/// Engine calls are CPU-bound; keep them off the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.unwrap_or_else(|e| Err(ApiError::BadRequest(format!("worker failed: {e}"))))
}

async fn evaluate(body: Result<Json<EvaluateRequest>, JsonRejection>) -> Response {
    let Json(req) = match body {
        Ok(b) => b,
        Err(e) => return bad_body(e),
    };
    match blocking(move || evaluate_request(&req)).await {
        Ok(r) => json_ok(to_json(&r)),
        Err(e) => api_error(e),
    }
}

async fn heatmap(body: Result<Json<HeatmapRequest>, JsonRejection>) -> Response {
    let Json(req) = match body {
        Ok(b) => b,
        Err(e) => return bad_body(e),
    };
    match blocking(move || heatmap_request(&req)).await {
        Ok(r) => json_ok(to_json(&r)),
        Err(e) => api_error(e),
    }
}

async fn sweep(body: Result<Json<SweepRequest>, JsonRejection>) -> Response {
    let Json(req) = match body {
        Ok(b) => b,
        Err(e) => return bad_body(e),
    };
    match blocking(move || sweep_request(&req)).await {
        Ok(r) => json_ok(to_json(&r)),
        Err(e) => api_error(e),
    }
}
