use std::process::ExitCode;

use framewright_service::{serve, Service, ServiceOptions};
use tracing::{error, info};
use tracing_subscriber::EnvFilter;

fn init_logging() {
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info"));
    let builder = tracing_subscriber::fmt().with_env_filter(filter);
    if std::env::var("STUDIO_LOG_FORMAT").is_ok_and(|v| v == "json") {
        builder.json().init();
    } else {
        builder.init();
    }
}

async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
    info!("shutting down");
}

#[tokio::main]
async fn main() -> ExitCode {
    init_logging();
    let options = match ServiceOptions::from_env() {
        Ok(o) => o,
        Err(e) => {
            error!(error = %e, "bad configuration");
            return ExitCode::from(2);
        }
    };
    let bind = std::env::var("STUDIO_BIND").unwrap_or_else(|_| "127.0.0.1:8080".into());
    let listener = match tokio::net::TcpListener::bind(&bind).await {
        Ok(l) => l,
        Err(e) => {
            error!(%bind, error = %e, "cannot bind");
            return ExitCode::FAILURE;
        }
    };
    info!(addr = %listener.local_addr().map(|a| a.to_string()).unwrap_or(bind), ?options, "listening");
    match serve(listener, Service::new(options), shutdown_signal()).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!(error = %e, "server failed");
            ExitCode::FAILURE
        }
    }
}
