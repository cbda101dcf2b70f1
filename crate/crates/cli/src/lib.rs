//! HTTP gateway and command-line front end over `minerec-core`.

pub mod api;
pub mod commands;
pub mod server;
pub mod store;

pub use api::{ApiError, ErrorBody};
pub use server::{router, AppState, ServiceConfig, DEFAULT_UPLOAD_CAP};
pub use store::{Store, StoredLog, StoredRecommendation};
