#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use chrono::{DateTime, Utc};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use artlens_core::canvas::{MockProvider, OutpaintingProvider};
use artlens_core::catalog::{Catalog, OpenMode};
use artlens_core::curation::{run_pipeline, PipelineConfig, SubsetSpec};
use artlens_core::explore::{EventLog, SessionStore};
use artlens_core::ingestion::{
    fetch_artworks, import_detections, ingest_artworks, CollectionConfig, ImageCache, RetryPolicy,
};
use artlens_core::taxonomy::Taxonomy;
use artlens_server::{router, AppState, Clock, ServiceOptions};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn t0() -> DateTime<Utc> {
    DateTime::parse_from_rfc3339("2024-05-01T10:00:00Z").unwrap().with_timezone(&Utc)
}

pub fn fixed_clock() -> Clock {
    Arc::new(t0)
}

/// Catalog built from the repository fixtures: paintings only, every
/// detection file imported, curated with k = 100.
pub async fn fixture_catalog(dir: &Path) -> Arc<Catalog> {
    let taxonomy = Arc::new(Taxonomy::default_table());
    let catalog = Catalog::open(dir.join("catalog"), taxonomy.clone(), OpenMode::ReadWrite).unwrap();
    let config =
        CollectionConfig { fixture_path: Some(fixtures().join("collection/artworks.jsonl")), ..Default::default() };
    let client = reqwest::Client::new();
    let fetched = fetch_artworks(&config, Some("painting"), &client).await.unwrap();
    let cache = ImageCache::new(dir.join("cache"), client, RetryPolicy::immediate(1)).unwrap();
    ingest_artworks(fetched.artworks, &cache, &catalog).await.unwrap();
    for name in ["pipeline.jsonl", "night_study.jsonl"] {
        let file = std::fs::File::open(fixtures().join("detections").join(name)).unwrap();
        let outcome = import_detections(std::io::BufReader::new(file), &taxonomy).unwrap();
        assert!(outcome.rejected.is_empty());
        catalog.put_detections(&outcome.detections).unwrap();
    }
    let config = PipelineConfig { subset: SubsetSpec::new(100).unwrap(), ..Default::default() };
    run_pipeline(&catalog, &cache, config).await.unwrap();
    Arc::new(catalog)
}

pub fn app_with(
    catalog: Arc<Catalog>,
    provider: Arc<dyn OutpaintingProvider>,
    options: ServiceOptions,
) -> (Router, Arc<AppState>) {
    let state = AppState::new(
        catalog,
        SessionStore::in_memory(chrono::Duration::days(7)),
        EventLog::in_memory(),
        provider,
        options,
        fixed_clock(),
    );
    (router(state.clone()), state)
}

pub fn app(catalog: Arc<Catalog>) -> (Router, Arc<AppState>) {
    app_with(catalog, Arc::new(MockProvider::new()), ServiceOptions::default())
}

pub async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = call_raw(app, method, uri, body).await;
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).expect("JSON body") };
    (status, value)
}

pub async fn call_raw(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(serde_json::to_vec(&v).unwrap())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

pub fn error_code(v: &Value) -> &str {
    v["error"]["code"].as_str().expect("error document")
}

/// Compares against `tests/golden/<name>.json`; `UPDATE_GOLDEN=1` rewrites.
/// `redact` replaces volatile strings (session or job ids) first.
pub fn assert_golden(name: &str, value: &Value, redact: &[(&str, &str)]) {
    let mut text = serde_json::to_string_pretty(value).unwrap();
    for (from, to) in redact {
        text = text.replace(from, to);
    }
    text.push('\n');
    // resolves from any crate of the workspace
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../server/tests/golden").join(format!("{name}.json"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &text).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden {}", path.display()));
    assert_eq!(text, expected, "golden {name} differs");
}

/// Checks `value` against a component schema of the shipped API
/// description: required keys, primitive types, enums, array items and
/// nested objects.
pub fn assert_schema(component: &str, value: &Value) {
    let api: Value = serde_json::from_str(artlens_server::API_DESCRIPTION).unwrap();
    let schema = &api["components"]["schemas"][component];
    assert!(!schema.is_null(), "no schema {component}");
    check(&api, schema, value, component);
}

fn resolve<'a>(api: &'a Value, schema: &'a Value) -> &'a Value {
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        let name = r.rsplit('/').next().unwrap();
        return &api["components"]["schemas"][name];
    }
    if let Some(all) = schema.get("allOf").and_then(Value::as_array) {
        return resolve(api, &all[0]);
    }
    schema
}

fn check(api: &Value, schema: &Value, value: &Value, at: &str) {
    let nullable = schema.get("nullable").and_then(Value::as_bool).unwrap_or(false);
    if value.is_null() {
        assert!(nullable, "{at}: null where not nullable");
        return;
    }
    let schema = resolve(api, schema);
    if let Some(allowed) = schema.get("enum").and_then(Value::as_array) {
        assert!(allowed.contains(value), "{at}: {value} not in enum");
    }
    match schema.get("type").and_then(Value::as_str) {
        Some("object") => {
            let obj = value.as_object().unwrap_or_else(|| panic!("{at}: expected object, got {value}"));
            for key in schema.get("required").and_then(Value::as_array).into_iter().flatten() {
                let key = key.as_str().unwrap();
                assert!(obj.contains_key(key), "{at}: missing required {key}");
            }
            if let Some(props) = schema.get("properties").and_then(Value::as_object) {
                for (k, sub) in props {
                    if let Some(v) = obj.get(k) {
                        check(api, sub, v, &format!("{at}.{k}"));
                    }
                }
            }
            if let Some(extra) = schema.get("additionalProperties").filter(|v| v.is_object()) {
                for (k, v) in obj {
                    check(api, extra, v, &format!("{at}.{k}"));
                }
            }
        }
        Some("array") => {
            let arr = value.as_array().unwrap_or_else(|| panic!("{at}: expected array"));
            for (i, v) in arr.iter().enumerate() {
                check(api, &schema["items"], v, &format!("{at}[{i}]"));
            }
        }
        Some("string") => assert!(value.is_string(), "{at}: expected string"),
        Some("integer") => assert!(value.is_u64() || value.is_i64(), "{at}: expected integer, got {value}"),
        Some("number") => assert!(value.is_number(), "{at}: expected number"),
        Some("boolean") => assert!(value.is_boolean(), "{at}: expected boolean"),
        _ => {}
    }
}
