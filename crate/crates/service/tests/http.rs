use std::path::PathBuf;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use vizgen_core::difftree::expresses;
use vizgen_core::mapping::{validate_spec, InterfaceSpec};
use vizgen_core::relational::Catalog;
use vizgen_core::sql::{parse_query, render_sql};
use vizgen_service::{router, AppState, Datasets, VersionStore};

const Q1: &str = "SELECT p, count(*) FROM T WHERE a = 1 GROUP BY p";
const Q2: &str = "SELECT p, count(*) FROM T WHERE b = 2 GROUP BY p";
const Q3: &str = "SELECT a, count(*) FROM T GROUP BY a";

fn datasets_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/datasets")
}

fn app_with(store: VersionStore) -> Router {
    router(AppState::new(
        Datasets::load(&datasets_dir()).unwrap(),
        store,
    ))
}

fn app() -> Router {
    app_with(VersionStore::in_memory())
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, v)
}

fn running(extra: Value) -> Value {
    let mut b =
        json!({ "queries": [Q1, Q2, Q3], "dataset": "demo", "screen": { "w": 1280, "h": 800 } });
    for (k, v) in extra.as_object().unwrap() {
        b[k] = v.clone();
    }
    b
}

fn sorted_rows(v: &Value) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            r.as_array()
                .unwrap()
                .iter()
                .map(|c| c.as_f64().unwrap())
                .collect()
        })
        .collect();
    rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
    rows
}

fn demo() -> Catalog {
    Catalog::from_dir(datasets_dir().join("demo")).unwrap()
}

#[tokio::test]
async fn generate_returns_expressive_validated_spec() {
    let app = app();
    let (status, body) = call(&app, "POST", "/generate", Some(running(json!({})))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["version_id"], "V1");
    let spec: InterfaceSpec = serde_json::from_value(body["spec"].clone()).unwrap();
    validate_spec(&spec, &demo()).unwrap();
    for q in [Q1, Q2, Q3] {
        let q = parse_query(q).unwrap();
        assert!(spec.forest.trees.iter().any(|t| expresses(t, &q).is_some()));
    }
    assert!(body["cost"]["total"].as_f64().unwrap() >= 0.0);
}

#[tokio::test]
async fn versions_are_numbered_and_keep_snapshots() {
    let app = app();
    let queries = json!(["SELECT  p, count(*) FROM T WHERE a = 1 GROUP BY p;", Q2, Q3]);
    let (_, first) = call(
        &app,
        "POST",
        "/generate",
        Some(json!({ "queries": queries, "dataset": "demo" })),
    )
    .await;
    let (_, second) = call(
        &app,
        "POST",
        "/generate",
        Some(running(json!({ "iterations": 5 }))),
    )
    .await;
    assert_eq!(
        (first["version_id"].as_str(), second["version_id"].as_str()),
        (Some("V1"), Some("V2"))
    );
    let (status, list) = call(&app, "GET", "/versions", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(list, json!(["V1", "V2"]));
    let (status, v1) = call(&app, "GET", "/versions/V1", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v1["query_log_snapshot"], queries);
    assert_eq!(v1["spec"], first["spec"]);
    assert_eq!(v1["dataset"], "demo");
    assert!(v1["created_at"].is_string());
    let (status, err) = call(&app, "GET", "/versions/V9", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["code"], "unknown_version");
}

#[tokio::test]
async fn identical_requests_give_identical_specs() {
    let app = app();
    let req = running(json!({ "seed": 3, "iterations": 30 }));
    let (_, a) = call(&app, "POST", "/generate", Some(req.clone())).await;
    let (_, b) = call(&app, "POST", "/generate", Some(req)).await;
    assert_eq!(a["spec"].to_string(), b["spec"].to_string());
    assert_ne!(a["version_id"], b["version_id"]);
}

#[tokio::test]
async fn generate_errors() {
    let app = app();
    let (status, err) = call(
        &app,
        "POST",
        "/generate",
        Some(json!({ "queries": ["SELECT a FROM T JOIN U ON a = b"], "dataset": "demo" })),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["code"], "unsupported_feature");
    assert_eq!(err["detail"]["feature"], "JOIN");

    let (status, err) = call(
        &app,
        "POST",
        "/generate",
        Some(json!({ "queries": [Q1, "SELECT FROM"], "dataset": "demo" })),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["code"], "parse_error");
    assert_eq!(err["detail"]["query"], 1);
    assert_eq!(err["detail"]["line"], 1);
    assert!(err["detail"]["column"].as_u64().unwrap() > 1);
    assert!(err["message"].is_string());

    let (status, err) = call(
        &app,
        "POST",
        "/generate",
        Some(json!({ "queries": [Q1], "dataset": "nope" })),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["code"], "unknown_dataset");

    let (status, err) = call(
        &app,
        "POST",
        "/generate",
        Some(json!({ "queries": ["SELECT x FROM T"], "dataset": "demo" })),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["code"], "invalid_query");

    let (status, err) = call(
        &app,
        "POST",
        "/generate",
        Some(json!({ "queries": [], "dataset": "demo" })),
    )
    .await;
    assert_eq!(
        (status, err["code"].as_str()),
        (StatusCode::BAD_REQUEST, Some("invalid_request"))
    );

    let (status, err) = call(
        &app,
        "POST",
        "/generate",
        Some(json!({ "dataset": "demo" })),
    )
    .await;
    assert_eq!(
        (status, err["code"].as_str()),
        (StatusCode::BAD_REQUEST, Some("invalid_request"))
    );

    let (_, list) = call(&app, "GET", "/versions", None).await;
    assert_eq!(list, json!([]), "failed requests create no versions");
}

/// A version over the unsplit initial tree, whose root choice selects Q1,
/// Q2 or Q3.
async fn initial_version(app: &Router) -> String {
    let (status, body) = call(
        app,
        "POST",
        "/generate",
        Some(running(json!({ "iterations": 0 }))),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["spec"]["forest"]["trees"].as_array().unwrap().len(), 1);
    body["version_id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn execute_returns_hand_evaluated_rows() {
    let app = app();
    let v = initial_version(&app).await;
    let exec =
        |i: usize| json!({ "version_id": v, "tree_id": 0, "bindings": { "0": { "index": i } } });
    // T(p, a, b) rows: (1,1,2) (2,1,1) (2,2,2) (1,2,1) (3,1,2) (3,2,1) (1,3,2) (2,3,1)
    let (status, r1) = call(&app, "POST", "/execute", Some(exec(0))).await;
    assert_eq!(status, StatusCode::OK, "{r1}");
    assert_eq!(
        sorted_rows(&r1),
        vec![vec![1.0, 1.0], vec![2.0, 1.0], vec![3.0, 1.0]]
    );
    assert_eq!(r1["sql"], Q1);
    assert_eq!(r1["columns"][0], json!({ "name": "p", "type": "num" }));
    let (_, r2) = call(&app, "POST", "/execute", Some(exec(1))).await;
    assert_eq!(
        sorted_rows(&r2),
        vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![3.0, 1.0]]
    );
    let (_, r3) = call(&app, "POST", "/execute", Some(exec(2))).await;
    assert_eq!(
        sorted_rows(&r3),
        vec![vec![1.0, 3.0], vec![2.0, 3.0], vec![3.0, 2.0]]
    );
    let (_, again) = call(&app, "POST", "/execute", Some(exec(2))).await;
    assert_eq!(again, r3);
}

#[tokio::test]
async fn execute_errors() {
    let app = app();
    let v = initial_version(&app).await;
    let cases = [
        (
            json!({ "version_id": v, "tree_id": 0, "bindings": { "7": { "index": 0 } } }),
            StatusCode::BAD_REQUEST,
            "invalid_binding",
        ),
        (
            json!({ "version_id": v, "tree_id": 0, "bindings": {} }),
            StatusCode::BAD_REQUEST,
            "incomplete_binding",
        ),
        (
            json!({ "version_id": v, "tree_id": 0, "bindings": { "0": { "index": 9 } } }),
            StatusCode::BAD_REQUEST,
            "invalid_binding",
        ),
        (
            json!({ "version_id": v, "tree_id": 5, "bindings": {} }),
            StatusCode::BAD_REQUEST,
            "unknown_tree",
        ),
        (
            json!({ "version_id": "V9", "tree_id": 0, "bindings": {} }),
            StatusCode::NOT_FOUND,
            "unknown_version",
        ),
        (
            json!({ "version_id": v }),
            StatusCode::BAD_REQUEST,
            "invalid_request",
        ),
    ];
    for (body, status, code) in cases {
        let (s, err) = call(&app, "POST", "/execute", Some(body.clone())).await;
        assert_eq!((s, err["code"].as_str()), (status, Some(code)), "{body}");
    }
}

#[tokio::test]
async fn export_follows_last_bindings() {
    let app = app();
    let v = initial_version(&app).await;
    let (status, fresh) = call(&app, "POST", "/export", Some(json!({ "version_id": v }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(fresh["sql"], render_sql(&parse_query(Q1).unwrap()));
    call(
        &app,
        "POST",
        "/execute",
        Some(json!({ "version_id": v, "tree_id": 0, "bindings": { "0": { "index": 1 } } })),
    )
    .await;
    let (_, after) = call(&app, "POST", "/export", Some(json!({ "version_id": v }))).await;
    assert_eq!(after["sql"], render_sql(&parse_query(Q2).unwrap()));
    let (_, stored) = call(&app, "GET", &format!("/versions/{v}"), None).await;
    assert_eq!(
        stored["last_bindings"],
        json!({ "0": { "0": { "index": 1 } } })
    );
    let (status, err) = call(&app, "POST", "/export", Some(json!({ "version_id": "V9" }))).await;
    assert_eq!(
        (status, err["code"].as_str()),
        (StatusCode::NOT_FOUND, Some("unknown_version"))
    );
}

#[tokio::test]
async fn export_joins_one_line_per_tree() {
    let app = app();
    let (_, body) = call(&app, "POST", "/generate", Some(running(json!({})))).await;
    let n = body["spec"]["forest"]["trees"].as_array().unwrap().len();
    let (_, out) = call(
        &app,
        "POST",
        "/export",
        Some(json!({ "version_id": body["version_id"] })),
    )
    .await;
    assert_eq!(out["sql"].as_str().unwrap().lines().count(), n);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_generation_is_gap_free() {
    let app = app();
    let handles: Vec<_> = (0..6)
        .map(|i| {
            let app = app.clone();
            tokio::spawn(async move {
                call(
                    &app,
                    "POST",
                    "/generate",
                    Some(running(json!({ "seed": i, "iterations": 10 }))),
                )
                .await
            })
        })
        .collect();
    let mut ids = Vec::new();
    for h in handles {
        let (status, body) = h.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        ids.push(body["version_id"].as_str().unwrap().to_string());
    }
    ids.sort_by_key(|s| s[1..].parse::<usize>().unwrap());
    assert_eq!(ids, (1..=6).map(|i| format!("V{i}")).collect::<Vec<_>>());
}

#[tokio::test]
async fn state_file_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.jsonl");
    let v = {
        let app = app_with(VersionStore::open(&path).unwrap());
        let v = initial_version(&app).await;
        call(
            &app,
            "POST",
            "/execute",
            Some(json!({ "version_id": v, "tree_id": 0, "bindings": { "0": { "index": 2 } } })),
        )
        .await;
        v
    };
    let app = app_with(VersionStore::open(&path).unwrap());
    let (_, list) = call(&app, "GET", "/versions", None).await;
    assert_eq!(list, json!([v]));
    let (_, out) = call(&app, "POST", "/export", Some(json!({ "version_id": v }))).await;
    assert_eq!(out["sql"], render_sql(&parse_query(Q3).unwrap()));
    let (_, next) = call(
        &app,
        "POST",
        "/generate",
        Some(running(json!({ "iterations": 0 }))),
    )
    .await;
    assert_eq!(next["version_id"], "V2");
}

#[tokio::test]
async fn lists_datasets() {
    let (status, body) = call(&app(), "GET", "/datasets", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!(["demo", "sdss"]));
}
