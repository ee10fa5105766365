use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use rescue_trainer::server::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

type Received = (String, u64, Value);

/// Reads SSE frames until `done` holds; returns (event, id, data) triples.
async fn read_until(body: Body, done: impl Fn(&[Received]) -> bool) -> Vec<Received> {
    let mut body = body;
    let mut buf = String::new();
    let mut out = Vec::new();
    while !done(&out) {
        let frame = tokio::time::timeout(Duration::from_secs(10), body.frame())
            .await
            .expect("event stream stalled")
            .expect("stream ended")
            .unwrap();
        let Ok(data) = frame.into_data() else { continue };
        buf.push_str(std::str::from_utf8(&data).unwrap());
        while let Some(end) = buf.find("\n\n") {
            let block: String = buf.drain(..end + 2).collect();
            let (mut kind, mut id, mut data) = (String::new(), 0, Value::Null);
            for line in block.lines() {
                if let Some(v) = line.strip_prefix("event: ").or(line.strip_prefix("event:")) {
                    kind = v.to_string();
                } else if let Some(v) = line.strip_prefix("id: ").or(line.strip_prefix("id:")) {
                    id = v.parse().unwrap();
                } else if let Some(v) = line.strip_prefix("data: ").or(line.strip_prefix("data:")) {
                    data = serde_json::from_str(v).unwrap();
                }
            }
            if !kind.is_empty() {
                out.push((kind, id, data));
            }
        }
    }
    out
}

async fn post(app: &axum::Router, uri: &str, body: Value) -> Value {
    let req = Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert!(resp.status().is_success(), "{uri}: {}", resp.status());
    serde_json::from_slice(&resp.into_body().collect().await.unwrap().to_bytes()).unwrap()
}

#[tokio::test]
async fn stream_replays_backlog_then_live_events_in_order() {
    let app = router(AppState::new(Duration::from_millis(1)));
    let created = post(
        &app,
        "/sessions",
        json!({ "scenario": { "preset": "test-city" }, "ruleset": { "bundled": "test_city" }, "seed": 5 }),
    )
    .await;
    let id = created["id"].as_str().unwrap().to_string();
    post(
        &app,
        &format!("/sessions/{id}/control"),
        json!({ "command": "step", "arg": 2 }),
    )
    .await;

    let resp = app
        .clone()
        .oneshot(
            Request::get(format!("/sessions/{id}/events"))
                .body(Body::empty())
                .unwrap(),
        )
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["content-type"], "text/event-stream");
    let body = resp.into_body();

    let reader = tokio::spawn(read_until(body, |ev| ev.last().is_some_and(|e| e.0 == "rewound")));
    post(
        &app,
        &format!("/sessions/{id}/control"),
        json!({ "command": "step", "arg": 3 }),
    )
    .await;
    post(
        &app,
        &format!("/sessions/{id}/control"),
        json!({ "command": "rewind", "arg": 1 }),
    )
    .await;
    let events = reader.await.unwrap();

    for (i, (_, seq, _)) in events.iter().enumerate() {
        assert_eq!(*seq, i as u64, "sequence numbers are dense from zero");
    }
    let steps: Vec<u64> = events
        .iter()
        .filter(|(k, _, _)| k == "step_completed")
        .map(|(_, _, d)| d["time"].as_u64().unwrap())
        .collect();
    assert_eq!(steps, vec![1, 2, 3, 4, 5]);
    assert_eq!(events.last().unwrap().2["time"], 1);
    for (kind, _, data) in &events {
        assert_eq!(data["type"], kind.as_str());
    }
    assert!(events.iter().any(|(k, _, _)| k == "goal_transition"));
}

#[tokio::test]
async fn stream_resumes_from_sequence() {
    let app = router(AppState::new(Duration::from_millis(1)));
    let created = post(
        &app,
        "/sessions",
        json!({ "scenario": { "preset": "test-city" }, "ruleset": { "bundled": "test_city" }, "seed": 5 }),
    )
    .await;
    let id = created["id"].as_str().unwrap().to_string();
    post(
        &app,
        &format!("/sessions/{id}/control"),
        json!({ "command": "step", "arg": 3 }),
    )
    .await;
    let resp = app
        .clone()
        .oneshot(
            Request::get(format!("/sessions/{id}/events?from=4"))
                .body(Body::empty())
                .unwrap(),
        )
        .await
        .unwrap();
    let events = read_until(resp.into_body(), |ev| ev.len() >= 3).await;
    assert_eq!(events.iter().map(|e| e.1).collect::<Vec<_>>(), vec![4, 5, 6]);
}
