//! HTTP facade over the curriculum engine.
//!
//! Bodies are JSON except graph, exercise and tag uploads, which take the
//! native text formats (or GraphML). Errors carry `{code, message}` with
//! status 400 (validation), 404 (missing) or 409 (constraint conflict).

pub mod error;
mod routes;
pub mod workspace;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub use error::{ApiError, ApiResult};
pub use routes::router;
pub use workspace::{GraphSummary, Workspace, WorkspaceIndex};

/// Opens the workspace at `data` and serves it until the process ends.
pub async fn serve(addr: SocketAddr, data: PathBuf) -> std::io::Result<()> {
    let ws = Workspace::open(data).map_err(|e| std::io::Error::other(e.message))?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(ws))).await
}
