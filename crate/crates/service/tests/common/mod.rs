#![allow(dead_code)]

use std::sync::Arc;
use std::time::Duration;

use framewright_core::cue::{CueKind, Hand, SkeletonFrame};
use framewright_core::session::{generate, replay, PipelineConfig, RecordingRecord, Scenario, TraceRecord};
use framewright_service::{serve, Outbound, Service, ServiceOptions, WireMessage};
use futures::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio::net::TcpStream;
use tokio::sync::oneshot;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

pub const WAIT: Duration = Duration::from_secs(10);

pub struct Server {
    pub base: String,
    pub ws_base: String,
    pub service: Arc<Service>,
    pub http: reqwest::Client,
    stop: Option<oneshot::Sender<()>>,
    task: Option<tokio::task::JoinHandle<()>>,
}

/// Ten session seconds per wall second unless overridden.
pub fn fast() -> ServiceOptions {
    ServiceOptions {
        time_scale: 10.0,
        queue_capacity: 100_000,
        ..Default::default()
    }
}

impl Server {
    pub async fn start(options: ServiceOptions) -> Self {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let service = Service::new(options);
        let (stop, stopped) = oneshot::channel::<()>();
        let task = tokio::spawn({
            let service = service.clone();
            async move {
                serve(listener, service, async {
                    let _ = stopped.await;
                })
                .await
                .unwrap();
            }
        });
        Self {
            base: format!("http://{addr}"),
            ws_base: format!("ws://{addr}"),
            service,
            http: reqwest::Client::new(),
            stop: Some(stop),
            task: Some(task),
        }
    }

    pub async fn shutdown(mut self) {
        if let Some(s) = self.stop.take() {
            let _ = s.send(());
        }
        if let Some(t) = self.task.take() {
            let _ = t.await;
        }
    }

    pub async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let r = self.http.post(format!("{}{path}", self.base)).json(&body).send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    pub async fn get(&self, path: &str) -> (u16, String) {
        let r = self.http.get(format!("{}{path}", self.base)).send().await.unwrap();
        (r.status().as_u16(), r.text().await.unwrap())
    }

    pub async fn create(&self) -> String {
        let (status, body) = self.post("/sessions", json!({})).await;
        assert_eq!(status, 201, "{body}");
        body["session_id"].as_str().unwrap().to_string()
    }

    pub async fn control(&self, id: &str, action: &str) -> (u16, Value) {
        self.post(&format!("/sessions/{id}/control"), json!({"action": action})).await
    }

    pub async fn status(&self, id: &str) -> Value {
        let (code, text) = self.get(&format!("/sessions/{id}")).await;
        assert_eq!(code, 200, "{text}");
        serde_json::from_str(&text).unwrap()
    }

    pub async fn connect(&self, id: &str) -> Client {
        let (ws, _) = tokio_tungstenite::connect_async(format!("{}/sessions/{id}/stream", self.ws_base))
            .await
            .unwrap();
        Client {
            ws,
            id: id.to_string(),
            seq: 0,
        }
    }

    /// Waits until the session's servo clock passes `t` seconds.
    pub async fn wait_for_time(&self, id: &str, t: f64) {
        tokio::time::timeout(WAIT, async {
            loop {
                if self.status(id).await["time"].as_f64().unwrap() >= t {
                    return;
                }
                tokio::time::sleep(Duration::from_millis(5)).await;
            }
        })
        .await
        .expect("session clock stalled");
    }
}

pub struct Client {
    pub ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
    pub id: String,
    pub seq: u64,
}

impl Client {
    pub async fn send_wire(&mut self, msg: &WireMessage) {
        self.ws
            .send(Message::Text(serde_json::to_string(msg).unwrap().into()))
            .await
            .unwrap();
    }

    /// Sends with the next seq and returns it.
    pub async fn send(&mut self, kind: &str, timestamp: f64, payload: Value) -> u64 {
        self.seq += 1;
        let msg = WireMessage {
            kind: kind.into(),
            session_id: self.id.clone(),
            seq: self.seq,
            timestamp,
            payload,
        };
        self.send_wire(&msg).await;
        self.seq
    }

    pub async fn recv(&mut self) -> Option<WireMessage> {
        loop {
            match tokio::time::timeout(WAIT, self.ws.next()).await.expect("stream went quiet")? {
                Ok(Message::Text(t)) => return Some(serde_json::from_str(&t).unwrap()),
                Ok(Message::Close(_)) | Err(_) => return None,
                Ok(_) => continue,
            }
        }
    }

    /// Reads until `pred` matches; returns everything read, match last.
    pub async fn until(&mut self, mut pred: impl FnMut(&WireMessage) -> bool) -> Vec<WireMessage> {
        let mut seen = Vec::new();
        let found = tokio::time::timeout(WAIT, async {
            while let Some(m) = self.recv().await {
                let hit = pred(&m);
                seen.push(m);
                if hit {
                    return true;
                }
            }
            false
        })
        .await;
        if found != Ok(true) {
            let other: Vec<String> = seen
                .iter()
                .filter(|m| m.kind != "RigState")
                .map(|m| format!("{} {}", m.kind, m.payload))
                .collect();
            panic!("expected message never came; {} messages, non-telemetry: {other:#?}", seen.len());
        }
        seen
    }

    /// Reads whatever arrives within `quiet` of the previous message.
    pub async fn drain(&mut self, quiet: Duration) -> Vec<WireMessage> {
        let mut seen = Vec::new();
        while let Ok(Some(Ok(m))) = tokio::time::timeout(quiet, self.ws.next()).await {
            if let Message::Text(t) = m {
                seen.push(serde_json::from_str(&t).unwrap());
            }
        }
        seen
    }
}

pub fn is_kind(kind: &'static str) -> impl Fn(&WireMessage) -> bool {
    move |m| m.kind == kind
}

pub fn is_ack_of(seq: u64) -> impl Fn(&WireMessage) -> bool {
    move |m| m.kind == "CueAck" && m.payload["ack_seq"] == seq
}

pub fn is_error(code: &'static str) -> impl Fn(&WireMessage) -> bool {
    move |m| m.kind == "Diagnostics" && m.payload["code"] == code
}

/// Messages every subscriber receives.
pub fn broadcast(msgs: &[WireMessage]) -> Vec<Outbound> {
    msgs.iter()
        .filter(|m| m.kind == "RigState" || m.kind == "DirectorSnapshot" || (m.kind == "Diagnostics" && m.payload.get("code").is_none()))
        .map(|m| Outbound::from_wire(m).unwrap())
        .collect()
}

/// A recorded skeleton frame in which `hand` is pointing at the table.
pub fn pointing_frame(hand: Hand) -> SkeletonFrame {
    let trace = generate(Scenario::Full, 1);
    let rec = replay(&trace, &PipelineConfig::default()).unwrap();
    let at = rec
        .records
        .iter()
        .find_map(|r| match r {
            RecordingRecord::Cue { event } if event.kind == CueKind::PointStart && event.hand == Some(hand) => {
                Some(event.timestamp)
            }
            _ => None,
        })
        .expect("scenario points with both hands");
    trace
        .records
        .iter()
        .filter_map(|l| match &l.record {
            TraceRecord::Skeleton(f) if f.timestamp <= at + 1e-9 => Some(f.clone()),
            _ => None,
        })
        .last()
        .unwrap()
}

/// Skeleton payload without its timestamp; the envelope carries it.
pub fn frame_payload(frame: &SkeletonFrame) -> Value {
    let mut v = serde_json::to_value(frame).unwrap();
    v.as_object_mut().unwrap().remove("timestamp");
    v
}
