//! HTTP routes and the WebSocket session stream.

use std::future::Future;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::ws::rejection::WebSocketUpgradeRejection;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use serde::Deserialize;
use serde_json::json;
use tokio::net::TcpListener;
use tracing::debug;

use crate::protocol::{ControlAction, Diagnostics, ErrorCode, Outbound, WireMessage, PROTOCOL_VERSION};
use crate::session::{ServiceError, SessionHandle, SessionSpec};
use crate::Service;

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_status))
        .route("/sessions/{id}/control", post(control))
        .route("/sessions/{id}/trace", get(trace))
        .route("/sessions/{id}/stream", get(stream))
        .with_state(service)
}

/// Serves until `shutdown` resolves. Sessions are stopped first so their
/// streams close and the server can drain.
pub async fn serve(
    listener: TcpListener,
    service: Arc<Service>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let svc = service.clone();
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async move {
            shutdown.await;
            svc.shutdown().await;
        })
        .await
}

struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        Self(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.0 {
            ServiceError::UnknownSession(_) | ServiceError::Closed => StatusCode::NOT_FOUND,
            ServiceError::InvalidTransition { .. } => StatusCode::CONFLICT,
            ServiceError::InvalidConfig(_) | ServiceError::Malformed(_) => StatusCode::BAD_REQUEST,
            ServiceError::Busy => StatusCode::SERVICE_UNAVAILABLE,
        };
        let body = json!({"error": {"code": self.0.code(), "message": self.0.to_string()}});
        (status, Json(body)).into_response()
    }
}

/// JSON body that may be empty; bad JSON maps to `MalformedPayload`.
fn parse_body<T: for<'de> Deserialize<'de> + Default>(body: &[u8]) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError(ServiceError::Malformed(e.to_string())))
}

async fn create_session(State(svc): State<Arc<Service>>, body: Bytes) -> Result<Response, ApiError> {
    let spec: SessionSpec = parse_body(&body)?;
    let handle = svc.create(spec)?;
    let status = handle.status();
    let body = json!({
        "session_id": status.session_id,
        "state": status.state,
        "protocol_version": PROTOCOL_VERSION,
        "stream": format!("/sessions/{}/stream", status.session_id),
    });
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn session_status(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(svc.get(&id)?.status()).into_response())
}

#[derive(Debug, Deserialize)]
struct ControlBody {
    action: ControlAction,
}

async fn control(
    State(svc): State<Arc<Service>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let body: ControlBody =
        serde_json::from_slice(&body).map_err(|e| ApiError(ServiceError::Malformed(e.to_string())))?;
    let state = svc.control(&id, body.action).await?;
    Ok(Json(json!({"session_id": id, "state": state})).into_response())
}

async fn trace(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let trace = svc.get(&id)?.trace().await?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], trace.to_jsonl()).into_response())
}

async fn stream(
    State(svc): State<Arc<Service>>,
    Path(id): Path<String>,
    ws: Result<WebSocketUpgrade, WebSocketUpgradeRejection>,
) -> Result<Response, ApiError> {
    // Unknown sessions are reported before upgrade problems.
    let handle = svc.get(&id)?;
    Ok(match ws {
        Ok(ws) => ws.on_upgrade(move |socket| connection(socket, handle)),
        Err(rejection) => rejection.into_response(),
    })
}

async fn connection(socket: WebSocket, handle: Arc<SessionHandle>) {
    let Ok((sub, queue)) = handle.subscribe().await else {
        return;
    };
    debug!(session_id = handle.id(), subscriber = sub, "stream opened");
    let (mut sink, mut source) = socket.split();

    let mut writer = {
        let queue = queue.clone();
        tokio::spawn(async move {
            while let Some(msg) = queue.next().await {
                let text = serde_json::to_string(&msg).expect("wire messages serialize");
                if sink.send(Message::Text(text.into())).await.is_err() {
                    return;
                }
            }
            let _ = sink.send(Message::Close(None)).await;
        })
    };

    let reject = |code: ErrorCode, message: String, seq: Option<u64>| {
        queue.push(
            Outbound::Diagnostics(Diagnostics::error(code, message, seq)),
            handle.status().time,
        );
    };
    loop {
        // Once the session ends the writer finishes; stop reading then.
        let frame = tokio::select! {
            f = source.next() => f,
            _ = &mut writer => break,
        };
        let Some(Ok(frame)) = frame else { break };
        let text = match frame {
            Message::Text(t) => t,
            Message::Binary(_) => {
                reject(ErrorCode::MalformedPayload, "binary frames are not accepted".into(), None);
                continue;
            }
            Message::Close(_) => break,
            _ => continue,
        };
        match serde_json::from_str::<WireMessage>(&text) {
            Ok(msg) => {
                let seq = msg.seq;
                match handle.ingest(sub, msg) {
                    Ok(()) => {}
                    Err(ServiceError::Closed) => break,
                    Err(e) => reject(e.code(), e.to_string(), Some(seq)),
                }
            }
            Err(e) => reject(ErrorCode::MalformedPayload, e.to_string(), None),
        }
    }

    handle.unsubscribe(sub);
    queue.close();
    if !writer.is_finished() {
        let _ = writer.await;
    }
    debug!(session_id = handle.id(), subscriber = sub, "stream closed");
}
