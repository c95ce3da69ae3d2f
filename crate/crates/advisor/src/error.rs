use serde::{Deserialize, Serialize};
use serde_json::Value;

use saa_core::{Error, Violation};

/// Machine-readable error codes carried in every error body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    Budget,
    Eligibility,
    AlreadyWinning,
    UnknownItem,
    NotReady,
    Terminal,
    InvalidWinner,
    InvalidProfile,
    InvalidConfig,
    RoundIndex,
    NotFound,
    BadRequest,
    Internal,
}

impl ErrorCode {
    pub fn http_status(self) -> u16 {
        match self {
            ErrorCode::NotFound => 404,
            ErrorCode::BadRequest => 400,
            ErrorCode::NotReady | ErrorCode::Terminal | ErrorCode::RoundIndex => 409,
            ErrorCode::Internal => 500,
            _ => 422,
        }
    }
}

/// Error body: `{"code": "...", "message": "...", "details": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError { code, message: message.into(), details: None }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }

    pub fn not_found(id: &str) -> Self {
        ApiError::new(ErrorCode::NotFound, format!("no session {id:?}"))
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}: {}", self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::IllegalBid { bidder, violation } => {
                let code = match violation {
                    Violation::Budget => ErrorCode::Budget,
                    Violation::Eligibility => ErrorCode::Eligibility,
                    Violation::AlreadyWinning => ErrorCode::AlreadyWinning,
                    Violation::UnknownItem => ErrorCode::UnknownItem,
                };
                ApiError::new(code, message).with_details(serde_json::json!({ "bidder": bidder }))
            }
            Error::Terminal => ApiError::new(ErrorCode::Terminal, message),
            Error::InvalidWinner { item, .. } => {
                ApiError::new(ErrorCode::InvalidWinner, message).with_details(serde_json::json!({ "item": item }))
            }
            Error::InvalidProfile { bidder, .. } => {
                ApiError::new(ErrorCode::InvalidProfile, message).with_details(serde_json::json!({ "bidder": bidder }))
            }
            Error::HashOverflow { .. } | Error::RoundBoundExceeded(_) => ApiError::new(ErrorCode::Internal, message),
            _ => ApiError::new(ErrorCode::InvalidConfig, message),
        }
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
