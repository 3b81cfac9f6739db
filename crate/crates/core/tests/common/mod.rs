//! Shared helpers for the integration tests: a wire client over the router
//! and simulated assessors that answer from a ground-truth matrix.

#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use prefbest::prefs::{seeded_rng, ArmId, PreferenceMatrix, RunRng};
use prefbest::service::http::{router, Clock, Service};
use prefbest::service::{Passage, Pool, TestPair};
use rand::Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

pub struct Wire {
    pub app: Router,
    pub time: Arc<AtomicU64>,
}

impl Wire {
    /// A service over `root` whose clock only moves when told to.
    pub fn new(root: &std::path::Path) -> Self {
        let time = Arc::new(AtomicU64::new(1_700_000_000_000));
        let t = time.clone();
        let clock: Clock = Arc::new(move || t.load(Ordering::SeqCst));
        let svc = Service::with_clock(root, clock).expect("service root");
        Wire {
            app: router(Arc::new(svc)),
            time,
        }
    }

    pub fn tick(&self, ms: u64) {
        self.time.fetch_add(ms, Ordering::SeqCst);
    }

    pub async fn call(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        self.call_as(method, uri, body, None).await
    }

    pub async fn call_as(
        &self,
        method: &str,
        uri: &str,
        body: Option<Value>,
        token: Option<&str>,
    ) -> (StatusCode, Value) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(b.to_string())),
            None => req.body(Body::empty()),
        }
        .expect("request");
        let resp = self
            .app
            .clone()
            .oneshot(req)
            .await
            .expect("infallible router");
        let status = resp.status();
        let bytes = resp.into_body().collect().await.expect("body").to_bytes();
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).expect("JSON body")
        };
        (status, value)
    }
}

pub fn passage_text(query: &str, i: usize) -> String {
    format!("{query}: candidate answer number {i}")
}

/// A pool of `k` distinct passages for `query`.
pub fn pool(query: &str, k: usize) -> Pool {
    Pool {
        query_id: query.to_string(),
        query_text: format!("what is {query}?"),
        members: (0..k)
            .map(|i| Passage::new(format!("{query}-p{i}"), passage_text(query, i)))
            .collect(),
        equivalence_classes: None,
    }
}

pub fn test_bank() -> Vec<TestPair> {
    (0..6)
        .map(|i| TestPair {
            question: format!("calibration question {i}"),
            best_known_answer: Passage::new(
                format!("gold-{i}"),
                format!("the right answer to calibration {i}"),
            ),
            off_topic: Passage::new(format!("junk-{i}"), format!("an unrelated paragraph {i}")),
        })
        .collect()
}

pub fn config(id: &str, pools: &[Pool], seed: u64) -> Value {
    json!({
        "id": id,
        "seed": seed,
        "pools": pools,
        "testBank": test_bank(),
    })
}

/// Ground truth for every passage text: which query, which arm.
pub struct Truth {
    arms: HashMap<String, (String, usize)>,
    matrices: HashMap<String, PreferenceMatrix>,
    gold: HashMap<String, bool>,
}

impl Truth {
    pub fn new(pools: &[Pool], matrices: Vec<PreferenceMatrix>) -> Self {
        let mut arms = HashMap::new();
        let mut by_query = HashMap::new();
        for (pool, m) in pools.iter().zip(matrices) {
            assert!(pool.len() <= m.k());
            for (i, p) in pool.members.iter().enumerate() {
                arms.insert(p.text.clone(), (pool.query_id.clone(), i));
            }
            by_query.insert(pool.query_id.clone(), m);
        }
        let mut gold = HashMap::new();
        for tp in test_bank() {
            gold.insert(tp.best_known_answer.text, true);
            gold.insert(tp.off_topic.text, false);
        }
        Truth {
            arms,
            matrices: by_query,
            gold,
        }
    }
}

/// A simulated assessor. Test pairs are answered correctly except for the
/// indices listed in `wrong_tests` (counted over all test pairs it sees).
pub struct Assessor {
    pub name: String,
    rng: RunRng,
    pub wrong_tests: Vec<usize>,
    tests_seen: usize,
}

impl Assessor {
    pub fn new(name: &str, seed: u64) -> Self {
        Assessor {
            name: name.to_string(),
            rng: seeded_rng(seed),
            wrong_tests: Vec::new(),
            tests_seen: 0,
        }
    }

    pub fn answer(&mut self, truth: &Truth, task: &Value) -> Vec<&'static str> {
        let mut out = Vec::new();
        for item in task["items"].as_array().expect("items") {
            let left = item["leftText"].as_str().expect("leftText");
            let right = item["rightText"].as_str().expect("rightText");
            let choice_left = if let Some(&left_gold) = truth.gold.get(left) {
                let wrong = self.wrong_tests.contains(&self.tests_seen);
                self.tests_seen += 1;
                left_gold != wrong
            } else {
                let (q, a) = &truth.arms[left];
                let (_, b) = &truth.arms[right];
                let p = truth.matrices[q].prob(ArmId(*a), ArmId(*b));
                self.rng.random::<f64>() < p
            };
            out.push(if choice_left { "left" } else { "right" });
        }
        out
    }
}

/// Runs every assessor until nobody gets a task, then advances; repeats
/// until the campaign is done. Returns the number of advance calls.
pub async fn drive_to_completion(
    wire: &Wire,
    id: &str,
    truth: &Truth,
    crew: &mut [Assessor],
) -> usize {
    let mut advances = 0;
    loop {
        loop {
            let mut served = false;
            for a in crew.iter_mut() {
                let (st, body) = wire
                    .call(
                        "GET",
                        &format!("/campaigns/{id}/tasks/next?worker={}", a.name),
                        None,
                    )
                    .await;
                if st == StatusCode::FORBIDDEN {
                    continue;
                }
                assert_eq!(st, StatusCode::OK, "{body}");
                if body["task"].is_null() {
                    continue;
                }
                served = true;
                let choices = a.answer(truth, &body["task"]);
                let task_id = body["task"]["taskId"].as_str().unwrap().to_string();
                let (st, rep) = wire
                    .call(
                        "POST",
                        &format!("/tasks/{task_id}/submit"),
                        Some(json!({ "choices": choices })),
                    )
                    .await;
                assert_eq!(st, StatusCode::OK, "{rep}");
                wire.tick(30_000);
            }
            if !served {
                break;
            }
        }
        let (st, rep) = wire
            .call("POST", &format!("/campaigns/{id}/advance"), None)
            .await;
        assert_eq!(st, StatusCode::OK, "{rep}");
        advances += 1;
        let (_, status) = wire.call("GET", &format!("/campaigns/{id}"), None).await;
        let done = status["queries"]
            .as_array()
            .unwrap()
            .iter()
            .all(|q| q["stage"] == "done");
        if done {
            return advances;
        }
        assert!(advances < 100, "campaign does not converge: {status}");
    }
}

/// Total number of extra winners beyond one per query in a set.
pub fn ties(results: &Value, set: &str) -> usize {
    results["queries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|q| q[set].as_array().unwrap().len().saturating_sub(1))
        .sum()
}
