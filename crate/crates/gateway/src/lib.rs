//! HTTP API and command-line front end over the records, media and imaging
//! crates. Handlers only translate between wire formats and library calls.

pub mod error;
pub mod routes;
pub mod server;
pub mod stages;

pub use error::{ApiError, ErrorCode};
pub use routes::{router, AppState, MAX_BODY_BYTES};
pub use server::{serve, ServeConfig, StartupError};
