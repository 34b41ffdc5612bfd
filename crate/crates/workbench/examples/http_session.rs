//! Talks to the session API in-process: create a session, teach one
//! demonstration, and watch the server reject an out-of-phase request.
//!
//! To serve over TCP instead: `cargo run -p lfd-workbench -- serve --port 8080 --data ./sessions`

use axum::body::Body;
use axum::http::Request;
use axum::Router;
use http_body_util::BodyExt;
use lfd_feedback::protocol::StudySetup;
use lfd_workbench::server::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn send(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (u16, Value) {
    let builder = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json");
    let req = builder
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status().as_u16();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (
        status,
        serde_json::from_slice(&bytes).unwrap_or(Value::Null),
    )
}

#[tokio::main]
async fn main() {
    let data = std::env::temp_dir().join(format!("lfd-http-{}", std::process::id()));
    let app = router(AppState::open(&data, StudySetup::default()).unwrap());

    let (status, created) = send(
        &app,
        "POST",
        "/sessions",
        Some(json!({"condition": "ef", "seed": 11})),
    )
    .await;
    let id = created["session_id"].as_str().unwrap().to_string();
    println!("{status} created {id} in {}", created["view"]["phase"]);
    let base = format!("/sessions/{id}");

    let (status, body) = send(&app, "POST", &format!("{base}/explanation/ack"), None).await;
    println!("{status} practice done, now {}", body["view"]["phase"]);

    let (_, body) = send(
        &app,
        "POST",
        &format!("{base}/demo/reset"),
        Some(json!({"start": {"row": 3, "col": 3}})),
    )
    .await;
    println!(
        "attempt from (3,3) with budget {}",
        body["outcome"]["budget"]
    );
    loop {
        let (_, body) = send(
            &app,
            "POST",
            &format!("{base}/demo/step"),
            Some(json!({"action": "Right"})),
        )
        .await;
        let o = &body["outcome"];
        println!(
            "  Right -> {} (budget left {})",
            o["cell"], o["budget_remaining"]
        );
        if !o["finished"].is_null() || o["steps"].as_u64() > Some(8) {
            break;
        }
    }

    let (status, body) = send(
        &app,
        "POST",
        &format!("{base}/survey"),
        Some(json!({"q1": 4, "q2": 4, "q3": 4, "q4": 4})),
    )
    .await;
    println!("{status} survey too early: {}", body["error"]);

    let (_, view) = send(&app, "GET", &base, None).await;
    println!(
        "valid demos in this set: {} of {}",
        view["valid_in_set"], view["demos_per_set"]
    );
    std::fs::remove_dir_all(&data).unwrap();
}
