//! HTTP binding of the repair session service.
//!
//! | method | path                     | body                         |
//! |--------|--------------------------|------------------------------|
//! | POST   | `/sessions`              | one record, corpus format    |
//! | GET    | `/sessions/{id}/question`|                              |
//! | POST   | `/sessions/{id}/answer`  | `{"answer": "yes", "seq": 1}`|
//! | POST   | `/sessions/{id}/stop`    |                              |
//! | GET    | `/sessions/{id}/result`  |                              |
//!
//! Every response is a JSON session view, or `{"error": ...}` with 400
//! (bad record), 404 (unknown session) or 409 (answer out of turn).

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ilrepair::engine::{ServiceError, SessionService, SessionView};
use serde::Deserialize;

pub struct ApiError(ServiceError);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::NoOutstandingQuestion | ServiceError::OutOfOrder { .. } => StatusCode::CONFLICT,
            ServiceError::BadRecord(_) => StatusCode::BAD_REQUEST,
        };
        (status, Json(serde_json::json!({ "error": self.0.to_string() }))).into_response()
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

type Svc = State<Arc<SessionService>>;
type ApiResult = Result<Json<SessionView>, ApiError>;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum AnswerValue {
    Flag(bool),
    Word(String),
}

#[derive(Debug, Deserialize)]
pub struct AnswerBody {
    pub answer: AnswerValue,
    pub seq: Option<usize>,
}

async fn create(State(svc): Svc, body: String) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    Ok((StatusCode::CREATED, Json(svc.create(&body)?)))
}

async fn question(State(svc): Svc, Path(id): Path<u64>) -> ApiResult {
    Ok(Json(svc.question(id)?))
}

async fn answer(State(svc): Svc, Path(id): Path<u64>, Json(body): Json<AnswerBody>) -> Response {
    let yes = match body.answer {
        AnswerValue::Flag(b) => b,
        AnswerValue::Word(w) => match w.to_ascii_lowercase().as_str() {
            "yes" | "y" => true,
            "no" | "n" => false,
            _ => {
                let msg = serde_json::json!({ "error": format!("answer must be yes or no, got `{w}`") });
                return (StatusCode::BAD_REQUEST, Json(msg)).into_response();
            }
        },
    };
    match svc.answer(id, yes, body.seq) {
        Ok(view) => Json(view).into_response(),
        Err(e) => ApiError(e).into_response(),
    }
}

async fn stop(State(svc): Svc, Path(id): Path<u64>) -> ApiResult {
    Ok(Json(svc.stop(id)?))
}

async fn result(State(svc): Svc, Path(id): Path<u64>) -> ApiResult {
    Ok(Json(svc.result(id)?))
}

pub fn router(service: Arc<SessionService>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}/question", get(question))
        .route("/sessions/{id}/answer", post(answer))
        .route("/sessions/{id}/stop", post(stop))
        .route("/sessions/{id}/result", get(result))
        .with_state(service)
}
