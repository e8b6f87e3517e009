//! HTTP exploration API over an artlens catalog, plus stand-in servers for
//! the outpainting and detector protocols.
//!
//! Every error response has the shape
//! `{"error": {"code": "<stable code>", "message": "<text>"}}`; the
//! machine-readable description is served at `/openapi.json`.

mod docs;
mod error;
mod providers;
mod routes;
mod state;

pub use docs::*;
pub use error::ApiError;
pub use providers::{mock_provider_router, stub_detector_router};
pub use routes::{router, API_DESCRIPTION};
pub use state::{system_clock, AppState, Clock, ServiceOptions};

/// Serves `app` on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    app: axum::Router,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}
