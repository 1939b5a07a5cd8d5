#![allow(dead_code)]

use std::path::Path;

use lamp::{Engine, EngineConfig};
use lamp_core::face::{FaceVector, SeededEmbedder};
use serde_json::{json, Value};

pub fn config_at(dir: &Path) -> EngineConfig {
    EngineConfig { data_dir: dir.to_owned(), ..EngineConfig::default() }
}

pub fn engine_at(dir: &Path) -> Engine {
    Engine::open(config_at(dir)).unwrap()
}

pub fn bob_paris() -> Value {
    json!({
        "pid": 1, "owner": "bob", "typ": "E",
        "loc": {"city": "Paris", "state": "Ile-de-France", "nation": "France"},
        "int": {"date_start": "2019-11-15", "date_end": "2019-12-15"},
        "xi": "Low"
    })
}

pub fn alice_diderot() -> Value {
    json!({
        "pid": 2, "owner": "alice", "typ": "E",
        "loc": {"street": "5 rue Thomas Mann", "city": "Paris", "state": "Ile-de-France", "nation": "France"},
        "int": {"anytime": true},
        "xi": "High"
    })
}

pub fn mismatched() -> Value {
    json!({"pid": 9, "owner": "eve", "typ": "S", "loc": {"city": "Paris", "nation": "France"}, "int": {"anytime": true}, "xi": "Low"})
}

pub fn face(user: &str) -> FaceVector {
    SeededEmbedder.identity(user)
}

pub fn face_record(user: &str) -> Value {
    json!({"user": user, "vector": Vec::<f64>::from(face(user))})
}

/// A photo at the university on 2019-12-01 showing Alice (slightly off
/// her enrolled face) and a stranger.
pub fn diderot_manifest() -> Value {
    let alice = SeededEmbedder.perturb(&face("alice"), 0.3, "photo");
    json!({
        "photo_id": "IMG_0001",
        "uploader": "carol",
        "location": {
            "street": "5 rue Thomas Mann", "city": "Paris", "state": "Ile-de-France", "nation": "France",
            "keywords": ["university"], "timestamp": "2019-12-01T14:30:00"
        },
        "faces": [
            {"index": 0, "vector": Vec::<f64>::from(alice)},
            {"index": 1, "vector": Vec::<f64>::from(face("stranger"))}
        ]
    })
}

pub fn elsewhere_manifest() -> Value {
    json!({
        "photo_id": "IMG_0002",
        "uploader": "carol",
        "location": {"city": "Lyon", "state": "Auvergne-Rhone-Alpes", "nation": "France", "timestamp": "2019-12-01T14:30:00"},
        "faces": [{"index": 0, "vector": Vec::<f64>::from(face("alice"))}]
    })
}

/// Bob, Alice and their faces, through the engine API.
pub fn seed_scenario(engine: &Engine) {
    engine.add_policy_json(&bob_paris().to_string()).unwrap();
    engine.add_policy_json(&alice_diderot().to_string()).unwrap();
    for user in ["alice", "bob"] {
        engine.enroll(lamp::engine::parse_face_record(&face_record(user).to_string()).unwrap()).unwrap();
    }
}
