//! JSON-over-HTTP routes.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::Serialize;

use crate::api::{CreateSession, JobStatus, ProfilesUpdate, RoundInput, WhatIfRequest};
use crate::error::{ApiError, ErrorCode};
use crate::service::AdvisorService;

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.code.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type Reply = Result<Response, ApiError>;
type Service = State<Arc<AdvisorService>>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(v)| v).map_err(|e| ApiError::new(ErrorCode::BadRequest, e.body_text()))
}

fn ok<T: Serialize>(status: StatusCode, value: T) -> Reply {
    Ok((status, Json(value)).into_response())
}

async fn create(State(svc): Service, payload: Result<Json<CreateSession>, JsonRejection>) -> Reply {
    let req = body(payload)?;
    ok(StatusCode::CREATED, svc.create_session(req)?)
}

async fn show(State(svc): Service, Path(id): Path<String>) -> Reply {
    ok(StatusCode::OK, svc.get(&id)?)
}

async fn record(State(svc): Service, Path(id): Path<String>, payload: Result<Json<RoundInput>, JsonRejection>) -> Reply {
    let input = body(payload)?;
    ok(StatusCode::OK, svc.record_round(&id, input)?)
}

async fn start_recommendation(State(svc): Service, Path(id): Path<String>) -> Reply {
    let status = svc.start_recommendation(&id)?;
    let code = if status.status == JobStatus::Ready { StatusCode::OK } else { StatusCode::ACCEPTED };
    ok(code, status)
}

async fn recommendation(State(svc): Service, Path(id): Path<String>) -> Reply {
    ok(StatusCode::OK, svc.recommendation_status(&id)?)
}

async fn what_if(State(svc): Service, Path(id): Path<String>, payload: Result<Json<WhatIfRequest>, JsonRejection>) -> Reply {
    let req = body(payload)?;
    let report = tokio::task::spawn_blocking(move || svc.what_if(&id, &req))
        .await
        .map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))??;
    ok(StatusCode::OK, report)
}

async fn profiles(State(svc): Service, Path(id): Path<String>, payload: Result<Json<ProfilesUpdate>, JsonRejection>) -> Reply {
    let update = body(payload)?;
    ok(StatusCode::OK, svc.set_profiles(&id, update.profiles)?)
}

async fn trace(State(svc): Service, Path(id): Path<String>) -> Reply {
    let text = svc.trace(&id)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response())
}

pub fn router(service: Arc<AdvisorService>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(show))
        .route("/sessions/{id}/rounds", post(record))
        .route("/sessions/{id}/recommendation", post(start_recommendation).get(recommendation))
        .route("/sessions/{id}/what-if", post(what_if))
        .route("/sessions/{id}/profiles", put(profiles))
        .route("/sessions/{id}/trace", get(trace))
        .with_state(service)
}

/// Serves the advisor on `listener` until the process stops.
pub async fn serve(listener: tokio::net::TcpListener, service: Arc<AdvisorService>) -> std::io::Result<()> {
    axum::serve(listener, router(service)).await
}
