mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use common::*;
use http_body_util::BodyExt;
use lamp::engine::parse_manifest;
use lamp::service::router;
use lamp::Engine;
use lamp_core::enforce::FailingRedactor;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(engine: &Arc<Engine>, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = router(engine.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

#[tokio::test]
async fn policy_lifecycle() {
    let dir = tempfile::tempdir().unwrap();
    let engine = Arc::new(engine_at(dir.path()));

    let (s, v) = call(&engine, Method::POST, "/policies", Some(bob_paris())).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v, json!({"pid": 1}));

    let (s, v) = call(&engine, Method::POST, "/policies", Some(bob_paris())).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["error"], "DuplicatePolicyId");

    let (s, _) = call(&engine, Method::POST, "/policies", Some(alice_diderot())).await;
    assert_eq!(s, StatusCode::CREATED);

    let (s, v) = call(&engine, Method::GET, "/policies?owner=alice", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert_eq!(v[0]["pid"], 2);
    let (_, v) = call(&engine, Method::GET, "/policies", None).await;
    assert_eq!(v.as_array().unwrap().len(), 2);

    let (s, v) = call(&engine, Method::DELETE, "/policies/P1", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v, json!({"removed": 1}));
    let (s, v) = call(&engine, Method::DELETE, "/policies/1", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["error"], "UnknownPolicyId");
    let (s, v) = call(&engine, Method::DELETE, "/policies/nope", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "MalformedPolicyId");
}

#[tokio::test]
async fn invalid_policies_get_400_with_a_code() {
    let dir = tempfile::tempdir().unwrap();
    let engine = Arc::new(engine_at(dir.path()));
    let cases = [
        (mismatched(), "TypeLocationMismatch"),
        (json!({"pid": 3, "owner": "kate", "typ": "S", "loc": "moon base", "int": {"anytime": true}, "xi": "High"}), "UnknownKeyword"),
        (
            json!({"pid": 4, "owner": "kate", "typ": "S", "loc": "bar", "int": {"date_start": "2020-02-01", "date_end": "2020-01-01"}, "xi": "High"}),
            "InvalidInterval",
        ),
        (
            json!({"pid": 5, "owner": "kate", "typ": "E", "loc": {"street": "1 main st"}, "int": {"anytime": true}, "xi": "High"}),
            "MalformedAddress",
        ),
        (json!({"pid": 6, "owner": "kate"}), "MalformedPolicy"),
    ];
    for (body, code) in cases {
        let (s, v) = call(&engine, Method::POST, "/policies", Some(body)).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "{code}");
        assert_eq!(v["error"], code);
    }
    assert_eq!(engine.policy_count(), 0);
}

#[tokio::test]
async fn enroll_validates_vectors() {
    let dir = tempfile::tempdir().unwrap();
    let engine = Arc::new(engine_at(dir.path()));
    let (s, v) = call(&engine, Method::POST, "/enroll", Some(face_record("alice"))).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v, json!({"user": "alice"}));
    let (s, v) = call(&engine, Method::POST, "/enroll", Some(json!({"user": "bob", "vector": [0.1, 0.2]}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "DimensionMismatch");
    assert_eq!(engine.face_count(), 1);
}

#[tokio::test]
async fn check_returns_the_engine_decisions() {
    let dir = tempfile::tempdir().unwrap();
    let engine = Arc::new(engine_at(dir.path()));
    seed_scenario(&engine);

    let (s, v) = call(&engine, Method::POST, "/check", Some(diderot_manifest())).await;
    assert_eq!(s, StatusCode::OK);
    let decisions = v["decisions"].as_array().unwrap();
    assert_eq!(decisions.len(), 1);
    assert_eq!(decisions[0]["face_index"], 0);
    assert_eq!(decisions[0]["protected_user"], "alice");
    assert_eq!(decisions[0]["triggering_policy"], 2);
    assert_eq!(decisions[0]["action"], "ReplaceFace");

    let direct = engine.check(&parse_manifest(&diderot_manifest().to_string()).unwrap()).unwrap();
    assert_eq!(v["decisions"], serde_json::to_value(&direct.decisions).unwrap());
    assert_eq!(v["retrieved"], json!([1, 2]));

    let (s, v) = call(&engine, Method::POST, "/check", Some(elsewhere_manifest())).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["decisions"], json!([]));
}

#[tokio::test]
async fn bad_manifests_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let engine = Arc::new(engine_at(dir.path()));
    let mut m = diderot_manifest();
    m["faces"][1]["index"] = json!(0);
    let (s, v) = call(&engine, Method::POST, "/check", Some(m)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "MalformedManifest");
    let (s, v) = call(&engine, Method::POST, "/check", Some(json!({"photo_id": "x"}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "MalformedManifest");
    let mut m = diderot_manifest();
    m["location"] = json!({"timestamp": "2019-12-01T10:00"});
    let (s, v) = call(&engine, Method::POST, "/check", Some(m)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "MalformedLocation");
}

#[tokio::test]
async fn enforce_reports_and_surfaces_redactor_failures() {
    let dir = tempfile::tempdir().unwrap();
    let engine = Arc::new(engine_at(dir.path()));
    seed_scenario(&engine);
    let (s, v) = call(&engine, Method::POST, "/enforce", Some(diderot_manifest())).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["photo_id"], "IMG_0001");
    assert_eq!(v["redactor_ack"]["faces_replaced"], 1);
    assert_eq!(v["decisions"].as_array().unwrap().len(), 1);

    let dir = tempfile::tempdir().unwrap();
    let failing = Arc::new(Engine::open_with_redactor(config_at(dir.path()), Arc::new(FailingRedactor("disk full".into()))).unwrap());
    seed_scenario(&failing);
    let (s, v) = call(&failing, Method::POST, "/enforce", Some(diderot_manifest())).await;
    assert_eq!(s, StatusCode::BAD_GATEWAY);
    assert_eq!(v["error"], "RedactorFailure");
    assert_eq!(v["decisions"].as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn healthz_counts() {
    let dir = tempfile::tempdir().unwrap();
    let engine = Arc::new(engine_at(dir.path()));
    seed_scenario(&engine);
    let (s, v) = call(&engine, Method::GET, "/healthz", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v, json!({"status": "ok", "policies": 2, "faces": 2}));
}

#[tokio::test]
async fn concurrent_checks_agree() {
    let dir = tempfile::tempdir().unwrap();
    let engine = Arc::new(engine_at(dir.path()));
    seed_scenario(&engine);
    let tasks: Vec<_> = (0..16)
        .map(|_| {
            let engine = engine.clone();
            tokio::spawn(async move { call(&engine, Method::POST, "/check", Some(diderot_manifest())).await.1["decisions"].clone() })
        })
        .collect();
    let mut seen = Vec::new();
    for t in tasks {
        seen.push(t.await.unwrap());
    }
    assert!(seen.windows(2).all(|w| w[0] == w[1]));
}
