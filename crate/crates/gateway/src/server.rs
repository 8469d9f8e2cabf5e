use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Instant;

use axum::extract::Request;
use axum::middleware::{self, Next};
use axum::response::Response;
use hine_core::{CatalogError, Catalogs, DEFAULT_MAX_DIMENSION};
use thiserror::Error;

use crate::routes::{router, AppState};

#[derive(Clone, Debug)]
pub struct ServeConfig {
    pub data_dir: PathBuf,
    pub bind: SocketAddr,
    /// Both catalog paths or neither; neither means the bundled catalogs.
    pub catalogs: Option<(PathBuf, PathBuf)>,
    pub max_dimension: usize,
}

impl ServeConfig {
    pub fn new(data_dir: impl Into<PathBuf>, bind: SocketAddr) -> Self {
        Self {
            data_dir: data_dir.into(),
            bind,
            catalogs: None,
            max_dimension: DEFAULT_MAX_DIMENSION,
        }
    }
}

#[derive(Debug, Error)]
pub enum StartupError {
    #[error("catalog: {0}")]
    Catalog(#[from] CatalogError),
    #[error("storage: {0}")]
    Storage(String),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
}

pub fn load_catalogs(paths: Option<&(PathBuf, PathBuf)>) -> Result<Catalogs, CatalogError> {
    match paths {
        Some((neonatal, post)) => Catalogs::from_files(neonatal, post),
        None => Ok(Catalogs::bundled()),
    }
}

async fn log_request(req: Request, next: Next) -> Response {
    let (method, path) = (req.method().clone(), req.uri().path().to_string());
    let start = Instant::now();
    let response = next.run(req).await;
    tracing::info!(
        %method,
        path,
        status = response.status().as_u16(),
        ms = start.elapsed().as_millis() as u64,
        "request"
    );
    response
}

/// Serves until `shutdown` resolves, then drains in-flight requests. The
/// bound address is printed to stdout once listening.
pub async fn serve(
    cfg: ServeConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), StartupError> {
    let catalogs = load_catalogs(cfg.catalogs.as_ref())?;
    let state = AppState::open(&cfg.data_dir, catalogs, cfg.max_dimension)
        .map_err(StartupError::Storage)?;
    let app = router(state).layer(middleware::from_fn(log_request));
    let listener = tokio::net::TcpListener::bind(cfg.bind)
        .await
        .map_err(|source| StartupError::Bind {
            addr: cfg.bind,
            source,
        })?;
    let addr = listener.local_addr().map_err(|source| StartupError::Bind {
        addr: cfg.bind,
        source,
    })?;
    println!("listening on http://{addr}");
    tracing::info!(%addr, data_dir = %cfg.data_dir.display(), "serving");
    axum::serve(listener, app)
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|e| StartupError::Storage(e.to_string()))
}

/// Resolves on ctrl-c or, on unix, SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}
