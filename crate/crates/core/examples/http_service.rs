//! The judging API end to end, in-process: create a campaign, fetch a task as
//! the judging UI would, submit it, advance and read the results. Campaign
//! files land in a temporary directory.
//!
//! To serve the same API over TCP:
//! ```bash
//! prefbest campaign-serve --dir campaigns --listen 127.0.0.1:8080
//! cargo run -p prefbest --example http_service
//! ```

use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use axum::Router;
use http_body_util::BodyExt;
use prefbest::service::http::{router, Service};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(
    app: &Router,
    method: &str,
    uri: &str,
    body: Option<Value>,
) -> Result<Value, Box<dyn std::error::Error>> {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))?;
    let resp = app.clone().oneshot(req).await?;
    let status = resp.status();
    let bytes = resp.into_body().collect().await?.to_bytes();
    let value: Value = serde_json::from_slice(&bytes)?;
    println!("{method} {uri} -> {status}");
    Ok(value)
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let app = router(Arc::new(Service::new(dir.path())?));

    let passages: Vec<Value> = (0..4)
        .map(|i| json!({ "id": format!("p{i}"), "text": format!("candidate answer {i}") }))
        .collect();
    let config = json!({
        "id": "demo",
        "seed": 1,
        "pools": [{ "queryId": "q1", "queryText": "what is a dueling bandit?", "members": passages }],
        "testBank": [{
            "question": "what colour is the sky?",
            "bestKnownAnswer": { "id": "g", "text": "The sky looks blue in daylight." },
            "offTopic": { "id": "x", "text": "Trains run on rails." }
        }],
    });
    let status = call(&app, "POST", "/campaigns", Some(config)).await?;
    println!("{}", serde_json::to_string_pretty(&status)?);

    let next = call(&app, "GET", "/campaigns/demo/tasks/next?worker=alice", None).await?;
    let task = &next["task"];
    for item in task["items"].as_array().into_iter().flatten() {
        println!("  [{}] vs [{}]", item["leftText"], item["rightText"]);
    }
    // Prefer the lower-numbered candidate, and the sky answer on the test pairs.
    let choices: Vec<&str> = task["items"]
        .as_array()
        .into_iter()
        .flatten()
        .map(|item| {
            let l = item["leftText"].as_str().unwrap_or_default();
            let r = item["rightText"].as_str().unwrap_or_default();
            if l.contains("sky") || (!r.contains("sky") && l < r) {
                "left"
            } else {
                "right"
            }
        })
        .collect();
    let task_id = task["taskId"].as_str().ok_or("no task")?;
    let report = call(
        &app,
        "POST",
        &format!("/tasks/{task_id}/submit"),
        Some(json!({ "choices": choices })),
    )
    .await?;
    println!("{report}");

    let advanced = call(&app, "POST", "/campaigns/demo/advance", None).await?;
    println!("{advanced}");
    let results = call(&app, "GET", "/campaigns/demo/results", None).await?;
    println!("{}", serde_json::to_string_pretty(&results)?);
    Ok(())
}
