//! HTTP serving. `POST /v1/chat` answers a question as a server-sent
//! event stream: one `delta` event per guarded chunk, then one terminal
//! `done` event carrying evidence ids, guardrail events, and stage
//! timings. `GET /healthz` reports build identity. Malformed requests
//! get a machine-readable 400.

use std::convert::Infallible;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::sse::{Event, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::json;

use crate::error::Result;
use crate::guardrail::GuardrailEvent;
use crate::pipeline::{ErrorInfo, Pipeline, QARequest, StageTimings};
use crate::types::{ChunkId, DegradationEvent};

#[derive(Clone)]
struct AppState {
    pipeline: Arc<Pipeline>,
}

/// Terminal SSE event payload.
#[derive(Serialize)]
struct DonePayload<'a> {
    evidence_ids: &'a [ChunkId],
    guardrail_events: &'a [GuardrailEvent],
    timings: &'a StageTimings,
    refused: bool,
    error: &'a Option<ErrorInfo>,
    degradations: &'a [DegradationEvent],
}

fn bad_request(code: &str, message: impl Into<String>) -> Response {
    (
        StatusCode::BAD_REQUEST,
        Json(json!({ "error": { "code": code, "message": message.into() } })),
    )
        .into_response()
}

async fn healthz() -> Response {
    Json(json!({
        "status": "ok",
        "name": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
    }))
    .into_response()
}

async fn chat(
    State(state): State<AppState>,
    payload: std::result::Result<Json<QARequest>, JsonRejection>,
) -> Response {
    let Json(request) = match payload {
        Ok(json) => json,
        Err(rejection) => return bad_request("bad_request", rejection.body_text()),
    };
    if request.query.trim().is_empty() {
        return bad_request("empty_query", "query must be nonempty");
    }

    // The pipeline blocks (thread fan-out, liveness probes); keep it off
    // the async workers.
    let pipeline = Arc::clone(&state.pipeline);
    let answered = tokio::task::spawn_blocking(move || pipeline.answer(&request)).await;
    let response = match answered {
        Ok(r) => r,
        Err(e) => {
            return (
                StatusCode::INTERNAL_SERVER_ERROR,
                Json(json!({ "error": { "code": "internal", "message": e.to_string() } })),
            )
                .into_response();
        }
    };

    let mut events = Vec::with_capacity(response.deltas.len() + 1);
    for delta in &response.deltas {
        match Event::default().event("delta").json_data(json!({ "text": delta })) {
            Ok(event) => events.push(event),
            Err(e) => {
                return (
                    StatusCode::INTERNAL_SERVER_ERROR,
                    Json(json!({ "error": { "code": "internal", "message": e.to_string() } })),
                )
                    .into_response();
            }
        }
    }
    let done = DonePayload {
        evidence_ids: &response.evidence_ids,
        guardrail_events: &response.guardrail_events,
        timings: &response.timings,
        refused: response.refused,
        error: &response.error,
        degradations: &response.degradations,
    };
    match Event::default().event("done").json_data(&done) {
        Ok(event) => events.push(event),
        Err(e) => {
            return (
                StatusCode::INTERNAL_SERVER_ERROR,
                Json(json!({ "error": { "code": "internal", "message": e.to_string() } })),
            )
                .into_response();
        }
    }

    let stream = futures::stream::iter(events.into_iter().map(Ok::<_, Infallible>));
    Sse::new(stream).into_response()
}

pub fn router(pipeline: Arc<Pipeline>) -> Router {
    Router::new()
        .route("/v1/chat", post(chat))
        .route("/healthz", get(healthz))
        .with_state(AppState { pipeline })
}

/// Binds and serves until the task is cancelled.
pub async fn serve(pipeline: Arc<Pipeline>, addr: SocketAddr) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(pipeline)).await?;
    Ok(())
}
