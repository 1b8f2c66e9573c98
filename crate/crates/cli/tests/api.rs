use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use provlog::explain::prepare;
use provlog::testing::POINTS_TO;
use provlog::{parse_program, Database, Options};
use provlog_cli::api::router;
use provlog_cli::repl::Repl;
use serde_json::{json, Value};
use tower::ServiceExt;

fn database() -> Arc<Database> {
    let mut db = Database::new(parse_program(POINTS_TO).unwrap(), Options::default()).unwrap();
    db.evaluate().unwrap();
    prepare(&mut db);
    Arc::new(db)
}

fn checksum(db: &Database) -> u64 {
    let mut h = DefaultHasher::new();
    for rel in db.program().rel_ids() {
        for (t, a) in db.tuples(rel) {
            t.hash(&mut h);
            (a.rule, a.height).hash(&mut h);
        }
    }
    db.symbols().len().hash(&mut h);
    let s = db.stats();
    (&s.iterations, s.rule_firings, s.annotation_updates, s.max_height, s.derived_tuples).hash(&mut h);
    h.finish()
}

struct Reply {
    status: StatusCode,
    content_type: Option<String>,
    text: String,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_str(&self.text).unwrap_or_else(|e| panic!("{e}: {}", self.text))
    }
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<&str>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header(header::CONTENT_TYPE, "application/json");
    }
    let req = req.body(Body::from(body.unwrap_or("").to_owned())).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let content_type = resp
        .headers()
        .get(header::CONTENT_TYPE)
        .map(|v| v.to_str().unwrap().to_owned());
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    Reply {
        status,
        content_type,
        text: String::from_utf8(bytes.to_vec()).unwrap(),
    }
}

async fn get(app: &Router, uri: &str) -> Reply {
    call(app, Method::GET, uri, None).await
}

async fn post(app: &Router, uri: &str, body: Value) -> Reply {
    call(app, Method::POST, uri, Some(&body.to_string())).await
}

fn count_nodes(n: &Value) -> usize {
    1 + n["children"].as_array().map_or(0, |c| c.iter().map(count_nodes).sum())
}

fn tree_height(n: &Value) -> usize {
    match n["children"].as_array() {
        Some(c) if !c.is_empty() => 1 + c.iter().map(tree_height).max().unwrap(),
        _ => 0,
    }
}

#[tokio::test]
async fn relations_and_tuples() {
    let app = router(database());
    let r = get(&app, "/relations").await;
    assert_eq!(r.status, StatusCode::OK);
    let rels = r.json();
    let vpt = rels.as_array().unwrap().iter().find(|r| r["name"] == "vpt").unwrap();
    assert_eq!(vpt["arity"], 2);
    assert_eq!(vpt["io"], "output");
    assert_eq!(vpt["tuples"], 4);
    assert_eq!(vpt["attributes"][0], json!({"name": "v", "type": "symbol"}));

    let t = get(&app, "/tuples/vpt").await.json();
    assert_eq!(t["total"], 4);
    let rows: Vec<(Value, Value, Value)> = t["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["tuple"].clone(), r["rule"].clone(), r["height"].clone()))
        .collect();
    assert_eq!(
        rows,
        vec![
            (json!(["vpt", "a", "l1"]), json!(1), json!(1)),
            (json!(["vpt", "b", "l1"]), json!(2), json!(2)),
            (json!(["vpt", "c", "l3"]), json!(1), json!(1)),
            (json!(["vpt", "d", "l4"]), json!(1), json!(1)),
        ]
    );

    let b = get(&app, "/tuples/vpt?prefix=b").await.json();
    assert_eq!(b["total"], 1);
    assert_eq!(b["rows"][0]["tuple"], json!(["vpt", "b", "l1"]));
    assert_eq!(get(&app, "/tuples/vpt?prefix=z").await.json()["total"], 0);

    let page = get(&app, "/tuples/vpt?offset=1&limit=2").await.json();
    assert_eq!(page["total"], 4);
    assert_eq!(page["rows"].as_array().unwrap().len(), 2);
    assert_eq!(page["rows"][0]["tuple"], json!(["vpt", "b", "l1"]));

    let missing = get(&app, "/tuples/nope").await;
    assert_eq!(missing.status, StatusCode::NOT_FOUND);
    assert_eq!(missing.json()["error"], "unknown_relation");
    assert_eq!(get(&app, "/tuples/vpt?prefix=a,b,c").await.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn explain_and_expand() {
    let db = database();
    let app = router(db.clone());
    let r = post(&app, "/explain", json!({"tuple": ["alias", "a", "b"], "depth": 10})).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.content_type.as_deref(), Some("application/json"));
    let tree = r.json();
    assert_eq!(count_nodes(&tree), 8);
    assert_eq!(tree_height(&tree), 3);
    assert_eq!(tree["children"][2], json!({"kind": "constraint", "text": "\"a\" != \"b\"", "holds": true}));

    // Byte-identical to the REPL's JSON mode for the same query.
    let mut repl = Repl::new(&db);
    repl.handle("format json");
    repl.handle("setdepth 10");
    assert_eq!(repl.handle("explain alias(\"a\", \"b\")").text, r.text.clone() + "\n");

    let one = post(&app, "/expand", json!({"tuple": ["vpt", "b", "l1"]})).await.json();
    assert_eq!(one["expanded"], true);
    let kids = one["children"].as_array().unwrap();
    assert_eq!(kids.len(), 2);
    assert_eq!(kids[0]["tuple"], json!(["assign", "b", "a"]));
    assert_eq!(kids[1]["tuple"], json!(["vpt", "a", "l1"]));
    assert_eq!(kids[1]["expanded"], false);
    assert_eq!(kids[1]["height"], 1);

    let edb = post(&app, "/explain", json!({"tuple": ["new", "a", "l1"], "depth": "inf"})).await.json();
    assert_eq!(count_nodes(&edb), 1);

    let absent = post(&app, "/explain", json!({"tuple": ["vpt", "b", "l4"]})).await;
    assert_eq!(absent.status, StatusCode::NOT_FOUND);
    assert_eq!(absent.json()["error"], "unknown_tuple");
    let undeclared = post(&app, "/explain", json!({"tuple": ["nope", "a"]})).await;
    assert_eq!(undeclared.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn negation_endpoints() {
    let app = router(database());
    let c = post(&app, "/negation/candidates", json!({"tuple": ["vpt", "b", "l4"]})).await;
    assert_eq!(c.status, StatusCode::OK);
    let c = c.json();
    let rules: Vec<u64> = c["candidates"].as_array().unwrap().iter().map(|c| c["rule"].as_u64().unwrap()).collect();
    assert_eq!(rules, [1, 2, 3]);
    assert_eq!(c["candidates"][1]["free"], json!(["Var2"]));
    assert_eq!(c["candidates"][1]["bindings"], json!({"Var": "b", "Obj": "l4"}));

    let e = post(
        &app,
        "/negation/evaluate",
        json!({"tuple": ["vpt", "b", "l4"], "rule": 2, "bindings": {"Var2": "d"}}),
    )
    .await;
    assert_eq!(e.status, StatusCode::OK);
    let e = e.json();
    let marks: Vec<&str> = e["literals"].as_array().unwrap().iter().map(|l| l["mark"].as_str().unwrap()).collect();
    assert_eq!(marks, ["✗", "✓"]);
    assert_eq!(e["literals"][0]["tuple"], json!(["assign", "b", "d"]));

    let exists = post(&app, "/negation/candidates", json!({"tuple": ["vpt", "a", "l1"]})).await;
    assert_eq!(exists.status, StatusCode::CONFLICT);
    assert_eq!(exists.json()["error"], "tuple_exists");

    let incomplete = post(&app, "/negation/evaluate", json!({"tuple": ["vpt", "b", "l4"], "rule": 2})).await;
    assert_eq!(incomplete.status, StatusCode::BAD_REQUEST);
    let wrong_rule = post(&app, "/negation/evaluate", json!({"tuple": ["vpt", "b", "l4"], "rule": 4, "bindings": {}})).await;
    assert_eq!(wrong_rule.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn malformed_bodies_are_json_400s() {
    let app = router(database());
    for body in ["", "{", "[1,2]", "{\"tuple\": 3}", "{\"tuple\": [\"vpt\", 1, 2]}", "{\"tuple\": [\"vpt\", \"a\", \"l1\"], \"depth\": 0}"] {
        let r = call(&app, Method::POST, "/explain", Some(body)).await;
        assert_eq!(r.status, StatusCode::BAD_REQUEST, "{body}: {}", r.text);
        let j = r.json();
        assert!(j["error"].is_string() && j["detail"].is_string(), "{j}");
    }
}

#[tokio::test]
async fn stats_and_cors() {
    let app = router(database());
    let s = get(&app, "/stats").await.json();
    assert_eq!(s["derived_tuples"], 6);
    assert_eq!(s["annotation_updates"], 0);

    let req = Request::builder()
        .method(Method::OPTIONS)
        .uri("/explain")
        .header(header::ORIGIN, "http://localhost:5173")
        .header(header::ACCESS_CONTROL_REQUEST_METHOD, "POST")
        .body(Body::empty())
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert!(resp.headers().contains_key(header::ACCESS_CONTROL_ALLOW_ORIGIN));
}

#[tokio::test]
async fn no_request_sequence_changes_the_store() {
    let db = database();
    let before = checksum(&db);
    let app = router(db.clone());
    let requests: Vec<(Method, &str, Option<Value>)> = vec![
        (Method::GET, "/relations", None),
        (Method::GET, "/tuples/alias?limit=1", None),
        (Method::POST, "/explain", Some(json!({"tuple": ["alias", "b", "a"], "depth": "inf"}))),
        (Method::POST, "/expand", Some(json!({"tuple": ["alias", "a", "b"]}))),
        (Method::POST, "/negation/candidates", Some(json!({"tuple": ["alias", "c", "d"]}))),
        (Method::POST, "/negation/evaluate", Some(json!({"tuple": ["alias", "c", "d"], "rule": 4, "bindings": {"Obj": "zz"}}))),
        (Method::POST, "/negation/evaluate", Some(json!({"tuple": ["vpt", "q", "r"], "rule": 2, "bindings": {"Var2": "s"}}))),
        (Method::POST, "/explain", Some(json!({"tuple": ["vpt", "fresh", "symbol"]}))),
        (Method::GET, "/stats", None),
    ];
    for round in 0..3 {
        for (m, uri, body) in &requests {
            let body = body.as_ref().map(Value::to_string);
            let r = call(&app, m.clone(), uri, body.as_deref()).await;
            assert!(r.status.is_success() || r.status.is_client_error(), "{uri}: {}", r.status);
            assert_eq!(checksum(&db), before, "round {round}, after {uri}");
        }
    }
}
