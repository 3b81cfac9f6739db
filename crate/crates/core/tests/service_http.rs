mod common;

use axum::http::StatusCode;
use serde_json::json;

use common::{config, pool, Assessor, Truth, Wire};
use prefbest::prefs::PreferenceMatrix;

fn truth(pools: &[prefbest::service::Pool]) -> Truth {
    Truth::new(
        pools,
        pools
            .iter()
            .map(|p| PreferenceMatrix::from_upper(p.len().max(2), |_, _| 0.7).unwrap())
            .collect(),
    )
}

#[tokio::test]
async fn unknown_ids_are_404() {
    let dir = tempfile::tempdir().unwrap();
    let wire = Wire::new(dir.path());
    for (method, uri) in [
        ("GET", "/campaigns/nope"),
        ("GET", "/campaigns/nope/results"),
        ("POST", "/campaigns/nope/advance"),
        ("GET", "/campaigns/nope/tasks/next?worker=w"),
        ("GET", "/campaigns/..%2Fetc"),
    ] {
        let (st, body) = wire.call(method, uri, None).await;
        assert_eq!(st, StatusCode::NOT_FOUND, "{method} {uri}: {body}");
        assert!(body["error"].is_string());
    }
    let (st, _) = wire
        .call(
            "POST",
            "/tasks/nope.3/submit",
            Some(json!({ "choices": [] })),
        )
        .await;
    assert_eq!(st, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn create_validates_and_refuses_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let wire = Wire::new(dir.path());
    let pools = vec![pool("q", 5)];

    let mut bad = config("c1", &pools, 1);
    bad["testBank"] = json!([]);
    let (st, body) = wire.call("POST", "/campaigns", Some(bad)).await;
    assert_eq!(st, StatusCode::BAD_REQUEST, "{body}");

    let (st, _) = wire
        .call("POST", "/campaigns", Some(json!({ "id": 3 })))
        .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);

    let (st, status) = wire
        .call("POST", "/campaigns", Some(config("c1", &pools, 1)))
        .await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(status["id"], "c1");
    assert_eq!(status["queries"][0]["stage"], "finalize");
    assert_eq!(status["queries"][0]["pending"], 10);

    let (st, _) = wire
        .call("POST", "/campaigns", Some(config("c1", &pools, 1)))
        .await;
    assert_eq!(st, StatusCode::CONFLICT);
}

#[tokio::test]
async fn task_shape_and_submission_rules() {
    let dir = tempfile::tempdir().unwrap();
    let wire = Wire::new(dir.path());
    let pools = vec![pool("q", 6)];
    let truth = truth(&pools);
    wire.call("POST", "/campaigns", Some(config("c", &pools, 2)))
        .await;

    let (st, body) = wire.call("GET", "/campaigns/c/tasks/next", None).await;
    assert_eq!(st, StatusCode::BAD_REQUEST, "missing worker: {body}");

    let (st, body) = wire
        .call("GET", "/campaigns/c/tasks/next?worker=w", None)
        .await;
    assert_eq!(st, StatusCode::OK);
    let task = &body["task"];
    assert_eq!(task["items"].as_array().unwrap().len(), 13);
    let task_id = task["taskId"].as_str().unwrap().to_string();
    assert!(task_id.starts_with("c."));

    let (st, _) = wire
        .call(
            "POST",
            &format!("/tasks/{task_id}/submit"),
            Some(json!({ "choices": ["left"] })),
        )
        .await;
    assert_eq!(st, StatusCode::BAD_REQUEST, "wrong number of choices");
    let (st, _) = wire
        .call(
            "POST",
            &format!("/tasks/{task_id}/submit"),
            Some(json!({ "choices": vec!["up"; 13] })),
        )
        .await;
    assert_eq!(st, StatusCode::BAD_REQUEST, "unknown side");

    let choices = Assessor::new("w", 1).answer(&truth, task);
    let (st, first) = wire
        .call(
            "POST",
            &format!("/tasks/{task_id}/submit"),
            Some(json!({ "choices": choices })),
        )
        .await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(first["targetsRecorded"], 10);
    assert_eq!(first["testsCorrect"], 3);

    let (st, again) = wire
        .call(
            "POST",
            &format!("/tasks/{task_id}/submit"),
            Some(json!({ "choices": choices })),
        )
        .await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(again, first);
}

#[tokio::test]
async fn expired_lease_is_rejected_and_reissued() {
    let dir = tempfile::tempdir().unwrap();
    let wire = Wire::new(dir.path());
    let pools = vec![pool("q", 3)];
    let truth = truth(&pools);
    let mut cfg = config("c", &pools, 2);
    cfg["leaseTimeoutMs"] = json!(1000);
    wire.call("POST", "/campaigns", Some(cfg)).await;

    let (_, body) = wire
        .call("GET", "/campaigns/c/tasks/next?worker=slow", None)
        .await;
    let task_id = body["task"]["taskId"].as_str().unwrap().to_string();
    let (_, none) = wire
        .call("GET", "/campaigns/c/tasks/next?worker=other", None)
        .await;
    assert!(none["task"].is_null(), "every pair is leased");

    wire.tick(1000);
    let choices = Assessor::new("slow", 1).answer(&truth, &body["task"]);
    let (st, _) = wire
        .call(
            "POST",
            &format!("/tasks/{task_id}/submit"),
            Some(json!({ "choices": choices })),
        )
        .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);

    let (_, again) = wire
        .call("GET", "/campaigns/c/tasks/next?worker=other", None)
        .await;
    assert_eq!(again["task"]["items"].as_array().unwrap().len(), 6);
}

#[tokio::test]
async fn bearer_tokens_bind_workers() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("tokens.json"),
        r#"{"tok-a": "alice", "tok-b": "bob"}"#,
    )
    .unwrap();
    let wire = Wire::new(dir.path());
    let pools = vec![pool("q", 5)];
    let truth = truth(&pools);
    wire.call("POST", "/campaigns", Some(config("c", &pools, 2)))
        .await;

    let next = "/campaigns/c/tasks/next";
    let (st, _) = wire.call("GET", next, None).await;
    assert_eq!(st, StatusCode::UNAUTHORIZED);
    let (st, _) = wire.call_as("GET", next, None, Some("forged")).await;
    assert_eq!(st, StatusCode::UNAUTHORIZED);
    let (st, _) = wire
        .call_as("GET", &format!("{next}?worker=bob"), None, Some("tok-a"))
        .await;
    assert_eq!(st, StatusCode::FORBIDDEN);

    let (st, body) = wire.call_as("GET", next, None, Some("tok-a")).await;
    assert_eq!(st, StatusCode::OK);
    let task_id = body["task"]["taskId"].as_str().unwrap().to_string();
    let choices = Assessor::new("alice", 1).answer(&truth, &body["task"]);
    let submit = format!("/tasks/{task_id}/submit");
    let (st, _) = wire
        .call_as(
            "POST",
            &submit,
            Some(json!({ "choices": choices })),
            Some("tok-b"),
        )
        .await;
    assert_eq!(st, StatusCode::FORBIDDEN);
    let (st, report) = wire
        .call_as(
            "POST",
            &submit,
            Some(json!({ "choices": choices })),
            Some("tok-a"),
        )
        .await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(report["worker"], "alice");
}

#[tokio::test]
async fn excluded_worker_gets_403_with_reason() {
    let dir = tempfile::tempdir().unwrap();
    let wire = Wire::new(dir.path());
    let pools = vec![pool("q", 9)];
    let truth = truth(&pools);
    wire.call("POST", "/campaigns", Some(config("c", &pools, 2)))
        .await;

    let mut sloppy = Assessor::new("sloppy", 1);
    sloppy.wrong_tests = vec![0];
    let (_, body) = wire
        .call("GET", "/campaigns/c/tasks/next?worker=sloppy", None)
        .await;
    let choices = sloppy.answer(&truth, &body["task"]);
    let task_id = body["task"]["taskId"].as_str().unwrap();
    let (_, report) = wire
        .call(
            "POST",
            &format!("/tasks/{task_id}/submit"),
            Some(json!({ "choices": choices })),
        )
        .await;
    assert_eq!(report["excluded"], true);

    let (st, body) = wire
        .call("GET", "/campaigns/c/tasks/next?worker=sloppy", None)
        .await;
    assert_eq!(st, StatusCode::FORBIDDEN);
    assert!(
        body["reason"].as_str().unwrap().contains("2 of 3"),
        "{body}"
    );

    let (_, status) = wire.call("GET", "/campaigns/c", None).await;
    assert_eq!(status["excludedWorkers"], json!(["sloppy"]));
}

#[tokio::test]
async fn results_are_partial_until_done_and_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let pools = vec![pool("a", 5), pool("b", 1)];
    let truth = truth(&pools);
    {
        let wire = Wire::new(dir.path());
        wire.call("POST", "/campaigns", Some(config("c", &pools, 4)))
            .await;
        let (_, results) = wire.call("GET", "/campaigns/c/results", None).await;
        assert_eq!(results["queries"][0]["status"], "partial");
        assert_eq!(results["queries"][1]["status"], "done");
        assert_eq!(results["queries"][1]["combined"], json!(["b-p0"]));
    }
    // A fresh service reopens the campaign from disk.
    let wire = Wire::new(dir.path());
    let mut crew = vec![Assessor::new("x", 1), Assessor::new("y", 2)];
    common::drive_to_completion(&wire, "c", &truth, &mut crew).await;
    let (_, results) = wire.call("GET", "/campaigns/c/results", None).await;
    assert_eq!(results["summary"]["done"], 2);
    assert_eq!(results["summary"]["totalJudgments"], 20);
    assert_eq!(results["summary"]["extraPhaseJudgments"], 10);
}
