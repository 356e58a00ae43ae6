mod common;

use std::sync::Arc;
use std::time::Duration;

use alignkit::api::{router, AppState};
use alignkit::engine::{SearchConfig, Weights};
use alignkit::export::{render_table, Format};
use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use common::*;

fn app() -> Router {
    router(AppState::new(Arc::new(fixture_provider()), Weights::default(), SearchConfig::default()))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, String) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn json_call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, text) = call(app, method, uri, body).await;
    (status, serde_json::from_str(&text).unwrap_or(Value::Null))
}

async fn create(app: &Router, texts: &[&str]) -> Value {
    let (status, snap) = json_call(app, Method::POST, "/sessions", Some(json!({ "texts": texts }))).await;
    assert_eq!(status, StatusCode::CREATED, "{snap}");
    snap
}

async fn import(app: &Router, notation: &str) -> Value {
    let a = grid(notation);
    let doc = json!({
        "version": 1,
        "source_texts": a.source_texts(),
        "grid": a.grid(),
        "locked_columns": [],
        "weights": Weights::default(),
        "search_cfg": SearchConfig::default(),
    });
    let (status, snap) = json_call(app, Method::POST, "/sessions/import", Some(doc)).await;
    assert_eq!(status, StatusCode::CREATED, "{snap}");
    snap
}

async fn wait_idle(app: &Router, id: &str) -> Value {
    for _ in 0..500 {
        let (_, snap) = json_call(app, Method::GET, &format!("/sessions/{id}"), None).await;
        if snap["status"] == "idle" {
            return snap;
        }
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
    panic!("search did not finish");
}

fn grid_json(notation: &str) -> Value {
    serde_json::to_value(grid(notation).grid()).unwrap()
}

#[tokio::test]
async fn create_session_with_fixture_vectors() {
    let app = app();
    let snap = create(&app, &DIABETICS).await;
    assert_eq!(snap["grid"], grid_json("23|diabetics|_|with|flu|_ / six|diabetic|patients|_|_|_ / _|_|_|patients|with|flu"));
    assert_eq!(snap["status"], "idle");
    assert_eq!(snap["changed_cells"], json!([]));
    assert_eq!(snap["can_undo"], false);
    assert_eq!(snap["rows"], 3);
    let id = snap["id"].as_str().unwrap();
    let (status, again) = json_call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(again["grid"], snap["grid"]);
}

#[tokio::test]
async fn empty_input_is_rejected() {
    let (status, err) = json_call(&app(), Method::POST, "/sessions", Some(json!({ "texts": [] }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["code"], "EmptyInput");
}

#[tokio::test]
async fn unknown_session_is_404() {
    let (status, err) = json_call(&app(), Method::GET, "/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["code"], "UnknownSession");
}

#[tokio::test]
async fn shift_op_uses_one_based_indices() {
    let app = app();
    let snap = import(&app, THREE_TEXTS).await;
    let id = snap["id"].as_str().unwrap();
    let op = json!({ "op": { "op": "shift", "col": 2, "rows": [3], "direction": "right", "distance": 1 } });
    let (status, snap) = json_call(&app, Method::POST, &format!("/sessions/{id}/ops"), Some(op)).await;
    assert_eq!(status, StatusCode::OK, "{snap}");
    assert_eq!(snap["grid"], grid_json(ROW3_SHIFTED));
    assert_eq!(snap["can_undo"], true);

    let (_, snap) = json_call(&app, Method::POST, &format!("/sessions/{id}/undo"), None).await;
    assert_eq!(snap["grid"], grid_json(THREE_TEXTS));
    let (_, snap) = json_call(&app, Method::POST, &format!("/sessions/{id}/redo"), None).await;
    assert_eq!(snap["grid"], grid_json(ROW3_SHIFTED));
}

#[tokio::test]
async fn validation_errors_are_422() {
    let app = app();
    let snap = import(&app, THREE_TEXTS).await;
    let id = snap["id"].as_str().unwrap();
    let ops = format!("/sessions/{id}/ops");
    for (op, code) in [
        (json!({ "op": "column_delete", "col": 9 }), "BadColumn"),
        (json!({ "op": "column_delete", "col": 0 }), "BadColumn"),
        (json!({ "op": "column_delete", "col": 1 }), "NonEmptyColumn"),
        (json!({ "op": "column_merge", "col": 4 }), "RightmostColumn"),
    ] {
        let (status, err) = json_call(&app, Method::POST, &ops, Some(json!({ "op": op }))).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{op}");
        assert_eq!(err["code"], code, "{op}");
    }
    let (status, err) = json_call(&app, Method::POST, &format!("/sessions/{id}/undo"), None).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("NothingToUndo")));
    let (status, err) = json_call(&app, Method::PUT, &format!("/sessions/{id}/locks"), Some(json!({ "locked_columns": [5] }))).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("BadColumn")));
    let (status, _) = json_call(&app, Method::POST, &ops, Some(json!({ "nonsense": true }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn locks_config_and_score() {
    let app = app();
    let snap = import(&app, "a").await;
    let id = snap["id"].as_str().unwrap();
    let (status, snap) = json_call(&app, Method::PUT, &format!("/sessions/{id}/locks"), Some(json!({ "locked_columns": [1] }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(snap["locked_columns"], json!([1]));

    let (_, score) = json_call(&app, Method::GET, &format!("/sessions/{id}/score"), None).await;
    assert_eq!(score["total"], 4.6);
    let weights = json!({ "weights": { "w_col": 0.2, "w_fcol": 0.2, "w_embed": 2.0, "w_bias": 10.0 } });
    let (status, snap) = json_call(&app, Method::PUT, &format!("/sessions/{id}/config"), Some(weights)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(snap["weights"]["w_embed"], 2.0);
    assert_eq!(snap["score"]["total"], 9.6);
    let bad = json!({ "search_cfg": { "max_steps": 0 } });
    let (status, err) = json_call(&app, Method::PUT, &format!("/sessions/{id}/config"), Some(bad)).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("BadConfig")));
}

#[tokio::test]
async fn realign_runs_in_background() {
    let app = app();
    let snap = import(&app, SEARCH_START).await;
    let id = snap["id"].as_str().unwrap();
    let (status, snap) = json_call(&app, Method::POST, &format!("/sessions/{id}/realign"), Some(json!({ "steps": 50 }))).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    assert_eq!(snap["status"], "searching");
    assert_eq!(snap["progress"]["limit"], 50);
    let done = wait_idle(&app, id).await;
    assert_eq!(done["can_undo"], true);
    let changed = !done["changed_cells"].as_array().unwrap().is_empty();
    assert_eq!(changed, done["grid"] != grid_json(SEARCH_START));
}

#[tokio::test]
async fn busy_session_rejects_edits() {
    let p = alignkit::engine::HashedProvider::new(0, 32).unwrap();
    let app_slow = router(AppState::new(Arc::new(p), Weights::default(), SearchConfig::default()));
    let texts: Vec<String> = (0..8).map(|i| format!("{} {}", USAGE_TEXTS[i % 7], USAGE_TEXTS[(i + 3) % 7])).collect();
    let (status, snap) = json_call(&app_slow, Method::POST, "/sessions", Some(json!({ "texts": texts, "config": { "search_cfg": { "greedy_prob": 0.0, "stall_window": 1000, "max_steps": 1 } } }))).await;
    assert_eq!(status, StatusCode::CREATED, "{snap}");
    let id = snap["id"].as_str().unwrap();
    let (status, _) = json_call(&app_slow, Method::PUT, &format!("/sessions/{id}/config"), Some(json!({ "search_cfg": { "greedy_prob": 0.0, "stall_window": 1000, "max_steps": 1 } }))).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = json_call(&app_slow, Method::POST, &format!("/sessions/{id}/realign"), Some(json!({ "steps": 100000 }))).await;
    assert_eq!(status, StatusCode::ACCEPTED);

    let (status, err) = json_call(&app_slow, Method::POST, &format!("/sessions/{id}/realign"), Some(json!({ "steps": 5 }))).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::CONFLICT, Some("Busy")));
    let (status, err) = json_call(&app_slow, Method::POST, &format!("/sessions/{id}/ops"), Some(json!({ "op": { "op": "no_op" } }))).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::CONFLICT, Some("Busy")));

    let (status, _) = json_call(&app_slow, Method::POST, &format!("/sessions/{id}/cancel"), None).await;
    assert_eq!(status, StatusCode::OK);
    let done = wait_idle(&app_slow, id).await;
    assert_eq!(done["status"], "idle");
}

#[tokio::test]
async fn export_formats_and_import() {
    let app = app();
    let snap = import(&app, THREE_TEXTS).await;
    let id = snap["id"].as_str().unwrap();
    let (status, tsv) = call(&app, Method::GET, &format!("/sessions/{id}/export?format=tsv"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(tsv, render_table(&grid(THREE_TEXTS), Format::Tsv));
    let (_, html) = call(&app, Method::GET, &format!("/sessions/{id}/export?format=html"), None).await;
    assert!(html.starts_with("<table"));
    let (_, json_table) = json_call(&app, Method::GET, &format!("/sessions/{id}/export?format=json"), None).await;
    assert_eq!(json_table["grid"], grid_json(THREE_TEXTS));
    let (status, err) = json_call(&app, Method::GET, &format!("/sessions/{id}/export?format=pdf"), None).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("BadFormat")));

    let (_, doc) = json_call(&app, Method::GET, &format!("/sessions/{id}/export?format=save"), None).await;
    let (status, copy) = json_call(&app, Method::POST, "/sessions/import", Some(doc.clone())).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_ne!(copy["id"], snap["id"]);
    assert_eq!(copy["grid"], snap["grid"]);

    let mut old = doc;
    old["version"] = json!(999);
    let (status, err) = json_call(&app, Method::POST, "/sessions/import", Some(old)).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("SchemaMismatch")));
}
