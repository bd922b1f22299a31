//! Live teaching service. Each session runs one learner on its own thread,
//! streams its steps over a websocket and feeds human feedback back into the
//! learner's updates.
//!
//! Endpoints:
//!
//! - `POST /sessions` creates a paused session and returns its id.
//! - `GET /sessions/{id}` reports status, speed and progress.
//! - `POST /sessions/{id}/control` takes `{cmd: pause|resume|set_speed|stop, value?}`.
//! - `POST /sessions/{id}/feedback` takes `{step, sign: 1|-1}`.
//! - `GET /sessions/{id}/events?from=N` returns buffered events from `N`.
//! - `GET /sessions/{id}/stream?from=N` upgrades to a websocket carrying the
//!   same events, and accepts `feedback` and `control` messages.

pub mod hub;
pub mod protocol;
mod routes;
pub mod session;

use std::net::SocketAddr;

pub use routes::{router, ApiError, AppState, ServiceConfig};

/// Serve on `addr` until the process is stopped.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(AppState::new(config))).await
}
