//! Advisor sessions for a human bidder in a live or replayed auction:
//! record observed rounds, request search-based recommendations, and run
//! read-only what-if simulations. [`http::router`] exposes the same
//! operations as JSON endpoints.

pub mod api;
pub mod error;
pub mod http;
pub mod service;

pub use api::*;
pub use error::{ApiError, ApiResult, ErrorCode};
pub use http::{router, serve};
pub use service::AdvisorService;
