// SPDX-License-Identifier: Apache-2.0

mod common;

use std::collections::BTreeSet;

use axum::http::{Method, StatusCode};
use serde_json::Value;

use common::TestHub;

fn collect_refs(v: &Value, out: &mut BTreeSet<String>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                if k == "$ref" {
                    out.insert(x.as_str().unwrap().to_string());
                } else {
                    collect_refs(x, out);
                }
            }
        }
        Value::Array(a) => a.iter().for_each(|x| collect_refs(x, out)),
        _ => {}
    }
}

async fn document(t: &TestHub) -> Value {
    let r = t.get("/api/openapi").await;
    assert_eq!(r.status, StatusCode::OK);
    r.body
}

#[tokio::test]
async fn every_documented_operation_is_routed() {
    let t = TestHub::new();
    let doc = document(&t).await;
    let paths = doc["paths"].as_object().unwrap();
    assert_eq!(paths.len(), 7);
    for (path, ops) in paths {
        let concrete = path.replace("{id}", "1").replace("{kind}", "climate");
        for method in ops.as_object().unwrap().keys() {
            let m: Method = method.to_uppercase().parse().unwrap();
            let r = t.send(m, &concrete, None, Some("{}".into())).await;
            assert_ne!(r.body["code"], "route_not_found", "{method} {path}");
            assert_ne!(r.status, StatusCode::METHOD_NOT_ALLOWED, "{method} {path}");
        }
    }
}

#[tokio::test]
async fn undocumented_methods_are_not_routed() {
    let t = TestHub::new();
    let doc = document(&t).await;
    for (path, ops) in doc["paths"].as_object().unwrap() {
        let concrete = path.replace("{id}", "1").replace("{kind}", "climate");
        let ops = ops.as_object().unwrap();
        for method in ["get", "post", "put", "patch", "delete"] {
            if ops.contains_key(method) {
                continue;
            }
            let r = t
                .send(method.to_uppercase().parse().unwrap(), &concrete, None, None)
                .await;
            assert!(
                matches!(r.status, StatusCode::METHOD_NOT_ALLOWED | StatusCode::NOT_FOUND),
                "{method} {path} answered {}",
                r.status
            );
        }
    }
}

#[tokio::test]
async fn every_schema_reference_resolves() {
    let t = TestHub::new();
    let doc = document(&t).await;
    let mut refs = BTreeSet::new();
    collect_refs(&doc, &mut refs);
    assert!(!refs.is_empty());
    let schemas = doc["components"]["schemas"].as_object().unwrap();
    for r in refs {
        let name = r.strip_prefix("#/components/schemas/").expect(&r);
        assert!(schemas.contains_key(name), "dangling {r}");
    }
}

#[tokio::test]
async fn writes_declare_the_key_scheme() {
    let t = TestHub::new();
    let doc = document(&t).await;
    assert_eq!(doc["components"]["securitySchemes"]["api_key"]["in"], "header");
    assert_eq!(doc["components"]["securitySchemes"]["api_key"]["name"], "X-API-Key");
    for path in ["/api/registry/models", "/api/registry/predictions"] {
        assert!(doc["paths"][path]["post"]["security"].is_array(), "{path}");
        assert!(doc["paths"][path]["get"].get("security").is_none(), "{path}");
    }
}

#[tokio::test]
async fn prediction_row_schema_matches_wire_columns() {
    let t = TestHub::new();
    let doc = document(&t).await;
    let props = doc["components"]["schemas"]["PredictionRow"]["properties"]
        .as_object()
        .unwrap();
    let names: BTreeSet<&str> = props.keys().map(String::as_str).collect();
    let want: BTreeSet<&str> = ["date", "pred", "lower", "upper", "adm_0", "adm_1", "adm_2", "adm_3"]
        .into_iter()
        .collect();
    assert_eq!(names, want);
}
