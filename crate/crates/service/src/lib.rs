//! Live studio sessions over HTTP and WebSocket.
//!
//! Each session owns a [`framewright_core::session::Pipeline`] driven by its
//! own control thread at wall-clock pace. Clients push perception inputs over
//! the session stream and receive rig telemetry, widget snapshots, acks and
//! diagnostics. Every accepted input is written to a trace that replays
//! offline to the same output.

pub mod http;
pub mod protocol;
pub mod queue;
pub mod session;
pub mod stream;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

pub use http::{router, serve};
pub use protocol::{ControlAction, ErrorCode, Outbound, SessionState, WireMessage, PROTOCOL_VERSION};
pub use session::{ServiceError, ServiceOptions, SessionHandle, SessionSpec, SessionStatus};
pub use stream::replay_stream;

/// Registry of live sessions.
#[derive(Debug)]
pub struct Service {
    options: ServiceOptions,
    sessions: Mutex<HashMap<String, Arc<SessionHandle>>>,
}

impl Service {
    pub fn new(options: ServiceOptions) -> Arc<Self> {
        Arc::new(Self {
            options,
            sessions: Mutex::default(),
        })
    }

    pub fn options(&self) -> &ServiceOptions {
        &self.options
    }

    pub fn create(&self, spec: SessionSpec) -> Result<Arc<SessionHandle>, ServiceError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let handle = Arc::new(SessionHandle::start(id.clone(), spec, &self.options)?);
        self.sessions.lock().expect("sessions lock").insert(id, handle.clone());
        Ok(handle)
    }

    /// Sessions stopped from their own stream are dropped here.
    pub fn get(&self, id: &str) -> Result<Arc<SessionHandle>, ServiceError> {
        let mut sessions = self.sessions.lock().expect("sessions lock");
        match sessions.get(id) {
            Some(h) if h.is_alive() => Ok(h.clone()),
            Some(_) => {
                sessions.remove(id);
                Err(ServiceError::UnknownSession(id.to_string()))
            }
            None => Err(ServiceError::UnknownSession(id.to_string())),
        }
    }

    /// Applies a control action. `Stop` also removes the session once its
    /// trace is written.
    pub async fn control(&self, id: &str, action: ControlAction) -> Result<SessionState, ServiceError> {
        let handle = self.get(id)?;
        let state = handle.control(action).await?;
        if action == ControlAction::Stop {
            self.sessions.lock().expect("sessions lock").remove(id);
            let h = handle.clone();
            let _ = tokio::task::spawn_blocking(move || h.join()).await;
        }
        Ok(state)
    }

    /// Stops every session and waits for their traces.
    pub async fn shutdown(&self) {
        let ids: Vec<String> = self.sessions.lock().expect("sessions lock").keys().cloned().collect();
        for id in ids {
            let _ = self.control(&id, ControlAction::Stop).await;
        }
    }
}
