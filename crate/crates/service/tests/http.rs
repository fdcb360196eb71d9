mod common;

use common::{fast, Server};
use framewright_core::session::{load_trace, SessionTrace};
use serde_json::json;

#[tokio::test]
async fn session_lifecycle() {
    let server = Server::start(fast()).await;
    let (code, body) = server.post("/sessions", json!({})).await;
    assert_eq!(code, 201);
    assert_eq!(body["state"], "idle");
    assert_eq!(body["protocol_version"], 1);
    let id = body["session_id"].as_str().unwrap().to_string();
    assert_eq!(body["stream"], format!("/sessions/{id}/stream"));
    assert_eq!(server.status(&id).await["state"], "idle");

    let (code, body) = server.control(&id, "pause").await;
    assert_eq!(code, 409);
    assert_eq!(body["error"]["code"], "InvalidTransition");

    assert_eq!(server.control(&id, "run").await, (200, json!({"session_id": id, "state": "running"})));
    assert_eq!(server.control(&id, "run").await.0, 409);
    server.wait_for_time(&id, 1.0).await;

    assert_eq!(server.control(&id, "pause").await.1["state"], "paused");
    let paused = server.status(&id).await;
    assert_eq!(paused["state"], "paused");
    tokio::time::sleep(std::time::Duration::from_millis(100)).await;
    assert_eq!(server.status(&id).await, paused, "a paused clock does not move");
    // Paused sessions rest on a tick boundary.
    let t = paused["time"].as_f64().unwrap();
    assert!(((t / 0.2).round() * 0.2 - t).abs() < 1e-9, "{t}");

    assert_eq!(server.control(&id, "reset").await.1["state"], "paused");
    assert_eq!(server.control(&id, "run").await.1["state"], "running");
    assert_eq!(server.control(&id, "stop").await.0, 200);

    let (code, body) = server.get(&format!("/sessions/{id}")).await;
    assert_eq!(code, 404);
    assert!(body.contains("UnknownSession"));
    server.shutdown().await;
}

#[tokio::test]
async fn unknown_sessions_are_404() {
    let server = Server::start(fast()).await;
    for path in ["/sessions/nope", "/sessions/nope/trace"] {
        assert_eq!(server.get(path).await.0, 404, "{path}");
    }
    let (code, body) = server.control("nope", "run").await;
    assert_eq!(code, 404);
    assert_eq!(body["error"]["code"], "UnknownSession");
    let (code, _) = server.get("/sessions/nope/stream").await;
    assert_eq!(code, 404);
    server.shutdown().await;
}

#[tokio::test]
async fn bad_requests_are_rejected() {
    let server = Server::start(fast()).await;
    let (code, body) = server.post("/sessions", json!({"overrides": {"telemetry_every": 0}})).await;
    assert_eq!(code, 400);
    assert_eq!(body["error"]["code"], "InvalidConfig");

    let r = server
        .http
        .post(format!("{}/sessions", server.base))
        .body("{not json")
        .send()
        .await
        .unwrap();
    assert_eq!(r.status().as_u16(), 400);
    let body: serde_json::Value = r.json().await.unwrap();
    assert_eq!(body["error"]["code"], "MalformedPayload");

    let id = server.create().await;
    let (code, body) = server.control(&id, "fly").await;
    assert_eq!(code, 400);
    assert_eq!(body["error"]["code"], "MalformedPayload");
    server.shutdown().await;
}

#[tokio::test]
async fn overrides_and_layout_reach_the_trace_header() {
    let server = Server::start(fast()).await;
    let (code, body) = server
        .post("/sessions", json!({"overrides": {"telemetry_every": 2}}))
        .await;
    assert_eq!(code, 201);
    let id = body["session_id"].as_str().unwrap();
    let (_, text) = server.get(&format!("/sessions/{id}/trace")).await;
    let trace = SessionTrace::from_jsonl(&text).unwrap();
    assert_eq!(trace.header.overrides, json!({"telemetry_every": 2}));
    assert!(trace.records.is_empty());
    assert_eq!(trace.header.duration, None);
    server.shutdown().await;
}

#[tokio::test]
async fn stop_writes_the_trace_file() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(framewright_service::ServiceOptions {
        trace_dir: Some(dir.path().into()),
        ..fast()
    })
    .await;
    let id = server.create().await;
    let mut client = server.connect(&id).await;
    server.control(&id, "run").await;
    let seq = client.send("Utterance", 0.3, json!({"text": "take a closer look"})).await;
    client.until(common::is_ack_of(seq)).await;
    server.wait_for_time(&id, 1.0).await;
    server.control(&id, "pause").await;
    let clock = server.status(&id).await["time"].as_f64().unwrap();
    let (_, live) = server.get(&format!("/sessions/{id}/trace")).await;
    let live = SessionTrace::from_jsonl(&live).unwrap();
    server.control(&id, "stop").await;

    let path = dir.path().join(format!("{id}.trace.jsonl"));
    let saved = load_trace(&path).unwrap();
    assert_eq!(saved, live);
    assert_eq!(saved.records.len(), 1);
    assert!(saved.records[0].tick.is_some());
    // Duration is the start of the last planned tick; the clock ran one
    // period past it.
    assert!((saved.header.duration.unwrap() - (clock - 0.2)).abs() < 1e-9);
    server.shutdown().await;
}

#[tokio::test]
async fn shutdown_stops_running_sessions() {
    let server = Server::start(fast()).await;
    let id = server.create().await;
    server.control(&id, "run").await;
    let mut client = server.connect(&id).await;
    let service = server.service.clone();
    server.shutdown().await;
    assert!(service.get(&id).is_err());
    // The stream ends once the session is gone.
    while client.recv().await.is_some() {}
}
