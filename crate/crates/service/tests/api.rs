use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use curriculum::book::{place_exercises, BookPlan};
use curriculum::graph::Dag;
use curriculum::ingest::parse_native;
use curriculum::sequencing::is_valid_order;
use curriculum_service::{router, Workspace};
use curriculum_testkit::{fixture, read_fixture};

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for e in std::fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        let target = to.join(e.file_name());
        if e.file_type().unwrap().is_dir() {
            copy_dir(&e.path(), &target);
        } else {
            std::fs::copy(e.path(), target).unwrap();
        }
    }
}

/// A data directory with the fixture content, latin exercises and tags.
fn data_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&fixture("content"), &dir.path().join("content"));
    std::fs::create_dir_all(dir.path().join("exercises")).unwrap();
    std::fs::copy(fixture("exercises.txt"), dir.path().join("exercises/latin.txt")).unwrap();
    std::fs::create_dir_all(dir.path().join("tags")).unwrap();
    std::fs::copy(fixture("tags.tsv"), dir.path().join("tags/latin.tsv")).unwrap();
    dir
}

fn app(dir: &Path) -> Router {
    router(Arc::new(Workspace::open(dir).unwrap()))
}

async fn send(app: &Router, method: Method, uri: &str, body: String) -> (StatusCode, String) {
    let req = Request::builder().method(method).uri(uri).body(Body::from(body)).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn call(app: &Router, method: Method, uri: &str, body: Value) -> (StatusCode, Value) {
    let text = if body.is_null() { String::new() } else { body.to_string() };
    let (status, out) = send(app, method, uri, text).await;
    let value = serde_json::from_str(&out).unwrap_or_else(|_| panic!("{uri} returned non-JSON: {out}"));
    (status, value)
}

async fn upload(app: &Router, id: &str, text: String) -> (StatusCode, Value) {
    let (status, out) = send(app, Method::POST, &format!("/graphs?id={id}"), text).await;
    (status, serde_json::from_str(&out).unwrap())
}

async fn with_latin() -> (tempfile::TempDir, Router) {
    let dir = data_dir();
    let app = app(dir.path());
    let (status, body) = upload(&app, "latin", read_fixture("latin-32.graph")).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    (dir, app)
}

async fn causal_closure(app: &Router) -> Value {
    let (status, body) = call(
        app,
        Method::POST,
        "/graphs/latin/closure",
        json!({"targets": ["prop_causale"], "choices": {"g_causale": "imperfetto"}}),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    body["closure"].clone()
}

const CAUSAL_ORDER: [&str; 8] = [
    "parti_discorso",
    "congiunzioni",
    "flessione",
    "verbo",
    "coniugazioni",
    "indicativo_presente",
    "imperfetto",
    "prop_causale",
];

fn book_request(closure: &Value, order: &[&str]) -> Value {
    json!({"graph": "latin", "closure": closure, "order": order, "created_at": 5, "title": "Causale"})
}

fn plan_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir.join("plans"))
        .map(|rd| rd.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect())
        .unwrap_or_default();
    names.sort();
    names
}

/// Every stored plan is a valid order of its closure with consistent placements.
fn assert_plans_valid(dir: &Path) {
    for name in plan_files(dir) {
        let plan = BookPlan::from_manifest(&std::fs::read_to_string(dir.join("plans").join(&name)).unwrap()).unwrap();
        assert!(is_valid_order(&plan.closure, &plan.order.nodes).is_valid(), "{name}");
        let p = place_exercises(&plan.order, &plan.exercises).unwrap();
        assert_eq!(p.items, plan.items, "{name}");
        let graph = dir.join("graphs").join(&plan.graph_ref.id).join(format!("v{}.graph", plan.graph_ref.version));
        let dag = Dag::new(parse_native(&std::fs::read_to_string(graph).unwrap()).unwrap().graph).unwrap();
        for e in &plan.closure.induced_edges {
            assert!(dag.edges().contains(e), "{name}: {e} not in pinned graph");
        }
    }
}

#[tokio::test]
async fn graphs_upload_list_and_browse() {
    let (_dir, app) = with_latin().await;
    let (status, list) = call(&app, Method::GET, "/graphs", Value::Null).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(list["graphs"][0], json!({"id": "latin", "version": 1, "discipline": "latin", "nodes": 32, "edges": 33}));

    let (status, g) = call(&app, Method::GET, "/graphs/latin", Value::Null).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(g["graph"]["nodes"].as_array().unwrap().len(), 32);

    let (status, n) = call(&app, Method::GET, "/graphs/latin/nodes/prop_causale", Value::Null).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(n["predecessors"].as_array().unwrap().len(), 3);
    assert_eq!(n["successors"], json!([]));

    let (status, e) = call(&app, Method::GET, "/graphs/greek", Value::Null).await;
    assert_eq!((status, e["code"].as_str()), (StatusCode::NOT_FOUND, Some("UNKNOWN_GRAPH")));
    let (status, e) = call(&app, Method::GET, "/graphs/latin/nodes/nope", Value::Null).await;
    assert_eq!((status, e["code"].as_str()), (StatusCode::NOT_FOUND, Some("UNKNOWN_NODE")));
    let (status, e) = call(&app, Method::GET, "/graphs/latin?version=9", Value::Null).await;
    assert_eq!((status, e["code"].as_str()), (StatusCode::NOT_FOUND, Some("UNKNOWN_VERSION")));
}

#[tokio::test]
async fn bad_uploads_are_rejected_with_codes() {
    let dir = data_dir();
    let app = app(dir.path());
    let cyclic = "graph c\nnode a | A | - | 10 | -\nnode b | B | - | 10 | -\nedge a -> b\nedge b -> a\n";
    let (status, e) = upload(&app, "c", cyclic.into()).await;
    assert_eq!((status, e["code"].as_str()), (StatusCode::BAD_REQUEST, Some("CYCLE")));
    let (status, e) = upload(&app, "c", "graph c\nnode a | A\n".into()).await;
    assert_eq!((status, e["code"].as_str()), (StatusCode::BAD_REQUEST, Some("SYNTAX")));
    assert_eq!(e["errors"][0]["line"], 2);
    let (status, e) = upload(&app, "..%2Fetc", read_fixture("diamond.graph")).await;
    assert_eq!((status, e["code"].as_str()), (StatusCode::BAD_REQUEST, Some("BAD_ID")));
    assert!(!dir.path().join("graphs").exists() || std::fs::read_dir(dir.path().join("graphs")).unwrap().count() == 0);
}

#[tokio::test]
async fn graphml_upload_reports_warnings() {
    let dir = data_dir();
    let app = app(dir.path());
    let (status, out) = send(&app, Method::POST, "/graphs?id=yed", read_fixture("graphml/red-black.graphml")).await;
    let body: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["warnings"][0]["code"], "ALT_GROUP_SYNTHESIZED");
    let (_, g) = call(&app, Method::GET, "/graphs/yed", Value::Null).await;
    assert!(g["graph"]["alt_groups"]["alt_n2"].is_object());
}

#[tokio::test]
async fn unresolved_group_is_a_conflict_with_choice_points() {
    let (_dir, app) = with_latin().await;
    let (status, e) = call(&app, Method::POST, "/graphs/latin/closure", json!({"targets": ["prop_causale"]})).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(e["code"], "UNRESOLVED_GROUP");
    let points = e["choice_points"].as_array().unwrap();
    assert_eq!(points.len(), 1);
    assert_eq!(points[0]["group"], "g_causale");
    let tails: Vec<&str> = points[0]["members"].as_array().unwrap().iter().map(|m| m["edge"]["tail"].as_str().unwrap()).collect();
    assert_eq!(tails, vec!["imperfetto", "perfetto"]);

    let c = causal_closure(&app).await;
    assert_eq!(c["nodes"].as_array().unwrap().len(), 8);
    let (status, m) = call(
        &app,
        Method::POST,
        "/graphs/latin/closure",
        json!({"targets": ["prop_causale"], "policy": "minimal"}),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(m["closure"], c);
    let (status, e) = call(&app, Method::POST, "/graphs/latin/closure", json!({"targets": ["nope"]})).await;
    assert_eq!((status, e["code"].as_str()), (StatusCode::BAD_REQUEST, Some("UNKNOWN_NODE")));
}

#[tokio::test]
async fn books_are_idempotent_and_feed_the_ranking() {
    let (dir, app) = with_latin().await;
    let closure = causal_closure(&app).await;

    let (status, ranked) = call(&app, Method::POST, "/graphs/latin/linearizations", json!({"closure": closure, "cap": 50})).await;
    assert_eq!(status, StatusCode::OK, "{ranked}");
    assert_eq!(ranked["truncated"], false);
    assert_eq!(ranked["orders"].as_array().unwrap().len(), 6);

    // The last-ranked order, once adopted, moves to the top.
    let last = ranked["orders"][5]["order"].clone();
    let chosen: Vec<&str> = last.as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let (status, a) = call(&app, Method::POST, "/books", book_request(&closure, &chosen)).await;
    assert_eq!(status, StatusCode::OK, "{a}");
    let mut again = book_request(&closure, &chosen);
    again["created_at"] = json!(99);
    let (_, b) = call(&app, Method::POST, "/books", again).await;
    assert_eq!(a["id"], b["id"]);
    assert_eq!(plan_files(dir.path()).len(), 1);
    let popularity = std::fs::read_to_string(dir.path().join("popularity/latin.txt")).unwrap();
    assert!(popularity.starts_with("books 1\n"), "{popularity}");

    let (_, reranked) = call(&app, Method::POST, "/graphs/latin/linearizations", json!({"closure": closure})).await;
    assert_eq!(reranked["orders"][0]["order"], last);
    let scaled = json!({"closure": closure, "weights": {"time": 7.0, "popularity": 7.0, "coherence": 7.0}});
    let (_, scaled) = call(&app, Method::POST, "/graphs/latin/linearizations", scaled).await;
    let orders = |v: &Value| v["orders"].as_array().unwrap().iter().map(|o| o["order"].clone()).collect::<Vec<_>>();
    assert_eq!(orders(&scaled), orders(&reranked));

    let id = a["id"].as_str().unwrap();
    let (status, got) = call(&app, Method::GET, &format!("/books/{id}"), Value::Null).await;
    assert_eq!((status, &got), (StatusCode::OK, &a));
    let (status, doc) = send(&app, Method::GET, &format!("/books/{id}/render"), String::new()).await;
    assert_eq!(status, StatusCode::OK);
    assert!(doc.starts_with("# Causale\n"));
    assert!(doc.contains("es_frase_causale"));
    let (status, e) = call(&app, Method::GET, "/books/book-0000/render", Value::Null).await;
    assert_eq!((status, e["code"].as_str()), (StatusCode::NOT_FOUND, Some("UNKNOWN_BOOK")));
}

#[tokio::test]
async fn edits_are_validated() {
    let (dir, app) = with_latin().await;
    let closure = causal_closure(&app).await;
    let (_, plan) = call(&app, Method::POST, "/books", book_request(&closure, &CAUSAL_ORDER)).await;
    let id = plan["id"].as_str().unwrap();

    let bad = json!({"ops": [{"op": "remove_node", "node": "congiunzioni"}]});
    let (status, e) = call(&app, Method::POST, &format!("/books/{id}/edits"), bad).await;
    assert_eq!(status, StatusCode::CONFLICT, "{e}");
    assert_eq!(e["code"], "MISSING_PREREQUISITE");
    assert_eq!(e["prerequisite"], "congiunzioni");

    let bad = json!({"ops": [{"op": "move_node", "node": "congiunzioni", "position": 0}]});
    let (status, e) = call(&app, Method::POST, &format!("/books/{id}/edits"), bad).await;
    assert_eq!(status, StatusCode::CONFLICT, "{e}");
    assert_eq!(e["code"], "VIOLATED_EDGE");
    assert_eq!(e["edge"]["tail"], "parti_discorso");
    assert_eq!(plan_files(dir.path()).len(), 1);

    let good = json!({"ops": [{"op": "move_node", "node": "congiunzioni", "position": 6}]});
    let (status, edited) = call(&app, Method::POST, &format!("/books/{id}/edits"), good).await;
    assert_eq!(status, StatusCode::OK, "{edited}");
    assert_ne!(edited["id"], plan["id"]);
    assert_eq!(edited["order"][6], "congiunzioni");
    assert_eq!(plan_files(dir.path()).len(), 2);
    assert_plans_valid(dir.path());
}

#[tokio::test]
async fn progress_and_review() {
    let (dir, app) = with_latin().await;
    for (n, s) in [("parti_discorso", "mastered"), ("congiunzioni", "mastered"), ("prop_causale", "gap")] {
        let (status, r) = call(&app, Method::PUT, &format!("/students/ada/progress/{n}"), json!({"graph": "latin", "status": s})).await;
        assert_eq!(status, StatusCode::OK, "{r}");
    }
    let (_, record) = call(&app, Method::GET, "/students/ada/progress", Value::Null).await;
    assert_eq!(record["entries"]["prop_causale"]["status"], "gap");

    let (status, plan) = call(&app, Method::POST, "/students/ada/review", json!({"gaps": ["prop_causale"], "created_at": 1})).await;
    assert_eq!(status, StatusCode::OK, "{plan}");
    // Both mastered units are obligations of units still taught.
    assert_eq!(plan["stubs"], json!(["congiunzioni", "parti_discorso"]));
    assert!(!plan["order"].as_array().unwrap().contains(&json!("parti_discorso")));
    assert_eq!(plan["author_role"], "student");

    let (status, e) = call(&app, Method::POST, "/students/ada/review", json!({"gaps": ["congiunzioni"]})).await;
    assert_eq!((status, e["code"].as_str()), (StatusCode::CONFLICT, Some("TARGET_MASTERED")));
    let (status, e) = call(&app, Method::PUT, "/students/ada/progress/nope", json!({"graph": "latin", "status": "gap"})).await;
    assert_eq!((status, e["code"].as_str()), (StatusCode::BAD_REQUEST, Some("UNKNOWN_NODE")));
    let (status, e) = call(&app, Method::PUT, "/students/ada/progress/casi", json!({"graph": "latin", "status": "bored"})).await;
    assert_eq!((status, e["code"].as_str()), (StatusCode::BAD_REQUEST, Some("BAD_REQUEST")));
    let (status, e) = call(&app, Method::POST, "/students/bob/review", json!({"gaps": ["casi"]})).await;
    assert_eq!((status, e["code"].as_str()), (StatusCode::NOT_FOUND, Some("NO_PROGRESS")));
    assert_plans_valid(dir.path());
}

#[tokio::test]
async fn merge_endpoint() {
    let (_dir, app) = with_latin().await;
    upload(&app, "italiano", read_fixture("italiano.graph")).await;
    let cross = json!([
        {"tail": "latin:casi", "head": "italiano:complementi_indiretti"},
        {"tail": "latin:congiunzioni", "head": "italiano:subordinate"},
    ]);
    let (status, m) = call(&app, Method::POST, "/graphs/merge", json!({"graphs": ["latin", "italiano"], "cross_edges": cross})).await;
    assert_eq!(status, StatusCode::OK, "{m}");
    assert_eq!(m["id"], "italiano+latin");
    assert_eq!(m["graph"]["nodes"].as_array().unwrap().len(), 37);

    let c = json!({"targets": ["italiano:subordinate"], "policy": "minimal"});
    let (status, c) = call(&app, Method::POST, "/graphs/italiano+latin/closure", c).await;
    assert_eq!(status, StatusCode::OK, "{c}");
    assert!(c["closure"]["nodes"].as_array().unwrap().contains(&json!("latin:parti_discorso")));

    let cycle = json!([
        {"tail": "latin:prima_decl", "head": "italiano:soggetto"},
        {"tail": "italiano:complementi_indiretti", "head": "latin:casi"},
    ]);
    let (status, e) = call(&app, Method::POST, "/graphs/merge", json!({"graphs": ["latin", "italiano"], "cross_edges": cycle, "id": "loop"})).await;
    assert_eq!((status, e["code"].as_str()), (StatusCode::CONFLICT, Some("CYCLE")));
    assert!(e["cycle"].as_array().unwrap().len() >= 2);
    let (status, _) = call(&app, Method::GET, "/graphs/loop", Value::Null).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn analyzer_endpoints() {
    let (_dir, app) = with_latin().await;
    let (status, r) = call(&app, Method::POST, "/analyzer/lookup", json!({"graph": "latin", "tags": ["Genitive_Plural", "dual"]})).await;
    assert_eq!(status, StatusCode::OK, "{r}");
    assert_eq!(r["report"]["direct_nodes"], json!(["seconda_decl"]));
    assert_eq!(r["report"]["unknown_tags"], json!(["dual"]));
    let (status, e) = call(&app, Method::POST, "/analyzer/lookup", json!({"graph": "latin", "tags": ["dual"]})).await;
    assert_eq!((status, e["code"].as_str()), (StatusCode::NOT_FOUND, Some("NO_MATCH")));

    let export = read_fixture("analyzer-export.tsv");
    let (status, b) = call(&app, Method::POST, "/analyzer/exercises", json!({"graph": "latin", "export": export})).await;
    assert_eq!(status, StatusCode::OK, "{b}");
    assert_eq!(b["batch"]["exercises"].as_array().unwrap().len(), 3);
    assert!(b["batch"]["prompts"]["form:rosa"].is_object());
}

#[tokio::test]
async fn adversarial_requests_never_persist_invalid_plans() {
    let (dir, app) = with_latin().await;
    let closure = causal_closure(&app).await;

    let mut reversed = CAUSAL_ORDER;
    reversed.reverse();
    let mut short = CAUSAL_ORDER.to_vec();
    short.pop();
    let mut duplicated = CAUSAL_ORDER.to_vec();
    duplicated[7] = "parti_discorso";
    let mut extra = CAUSAL_ORDER.to_vec();
    extra.push("casi");

    let mut tampered = closure.clone();
    tampered["nodes"].as_array_mut().unwrap().retain(|n| n != "flessione");
    let mut regrouped = closure.clone();
    regrouped["resolved_groups"] = json!({});
    let mut foreign = closure.clone();
    foreign["induced_edges"].as_array_mut().unwrap().push(json!({"tail": "prop_causale", "head": "verbo", "kind": "required", "alt_group": null}));

    let cases = [
        (book_request(&closure, &reversed), StatusCode::CONFLICT, "VIOLATED_EDGE"),
        (book_request(&closure, &short), StatusCode::CONFLICT, "NOT_A_PERMUTATION"),
        (book_request(&closure, &duplicated), StatusCode::CONFLICT, "NOT_A_PERMUTATION"),
        (book_request(&closure, &extra), StatusCode::CONFLICT, "NOT_A_PERMUTATION"),
        (book_request(&tampered, &CAUSAL_ORDER), StatusCode::CONFLICT, "STALE_CLOSURE"),
        (book_request(&regrouped, &CAUSAL_ORDER), StatusCode::CONFLICT, "STALE_CLOSURE"),
        (book_request(&foreign, &CAUSAL_ORDER), StatusCode::CONFLICT, "STALE_CLOSURE"),
        (json!({"graph": "latin", "closure": closure, "order": CAUSAL_ORDER, "exercises": ["ghost"]}), StatusCode::BAD_REQUEST, "UNKNOWN_EXERCISE"),
        (json!({"graph": "latin", "version": 4, "closure": closure, "order": CAUSAL_ORDER}), StatusCode::NOT_FOUND, "UNKNOWN_VERSION"),
        (json!({"graph": "greek", "closure": closure, "order": CAUSAL_ORDER}), StatusCode::NOT_FOUND, "UNKNOWN_GRAPH"),
        (json!({"graph": "latin"}), StatusCode::BAD_REQUEST, "BAD_REQUEST"),
    ];
    for (req, status, code) in cases {
        let (got, e) = call(&app, Method::POST, "/books", req).await;
        assert_eq!((got, e["code"].as_str()), (status, Some(code)), "{e}");
    }
    let (status, e) = send(&app, Method::POST, "/books", "{not json".into()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{e}");
    assert!(plan_files(dir.path()).is_empty());

    // A new version drops congiunzioni -> prop_causale: the old closure is stale
    // against the latest graph but still valid when pinned to version 1.
    let v2 = read_fixture("latin-32.graph").replace("edge congiunzioni -> prop_causale required\n", "");
    let (status, up) = upload(&app, "latin", v2).await;
    assert_eq!((status, up["version"].as_u64()), (StatusCode::OK, Some(2)), "{up}");
    let (status, e) = call(&app, Method::POST, "/books", book_request(&closure, &CAUSAL_ORDER)).await;
    assert_eq!((status, e["code"].as_str()), (StatusCode::CONFLICT, Some("STALE_CLOSURE")));
    let mut pinned = book_request(&closure, &CAUSAL_ORDER);
    pinned["version"] = json!(1);
    let (status, plan) = call(&app, Method::POST, "/books", pinned).await;
    assert_eq!(status, StatusCode::OK, "{plan}");
    assert_eq!(plan["graph_ref"], json!({"id": "latin", "version": 1}));

    // Edits of the pinned plan still see version 1's edges.
    let id = plan["id"].as_str().unwrap();
    let bad = json!({"ops": [{"op": "move_node", "node": "prop_causale", "position": 1}]});
    let (status, _) = call(&app, Method::POST, &format!("/books/{id}/edits"), bad).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let bad = json!({"ops": [{"op": "insert_node", "node": "nope", "position": 0}]});
    let (status, e) = call(&app, Method::POST, &format!("/books/{id}/edits"), bad).await;
    assert_eq!((status, e["code"].as_str()), (StatusCode::BAD_REQUEST, Some("UNKNOWN_NODE")));

    assert_eq!(plan_files(dir.path()).len(), 1);
    assert_plans_valid(dir.path());
}

#[tokio::test]
async fn restart_reproduces_the_index() {
    let (dir, app) = with_latin().await;
    upload(&app, "latin", read_fixture("latin-32.graph")).await;
    upload(&app, "diamond", read_fixture("diamond.graph")).await;
    let closure = causal_closure(&app).await;
    call(&app, Method::POST, "/books", book_request(&closure, &CAUSAL_ORDER)).await;
    call(&app, Method::PUT, "/students/ada/progress/casi", json!({"graph": "latin", "status": "gap"})).await;

    let before = Workspace::open(dir.path()).unwrap().index();
    assert_eq!(before.graphs.len(), 3);
    assert_eq!(before.plans.len(), 1);
    assert_eq!(before.students.len(), 1);
    drop(app);
    let reopened = app_index(dir.path());
    assert_eq!(reopened, before);

    let app = self::app(dir.path());
    let (_, list) = call(&app, Method::GET, "/graphs", Value::Null).await;
    assert_eq!(list["graphs"][1]["version"], 2);
}

fn app_index(dir: &Path) -> curriculum_service::WorkspaceIndex {
    Workspace::open(dir).unwrap().index()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_writers_are_serialized() {
    let (dir, app) = with_latin().await;
    let ids: Vec<String> = {
        let (_, g) = call(&app, Method::GET, "/graphs/latin", Value::Null).await;
        g["graph"]["nodes"].as_array().unwrap().iter().map(|n| n["id"].as_str().unwrap().to_owned()).collect()
    };
    let mut tasks = Vec::new();
    for n in ids.clone() {
        let app = app.clone();
        tasks.push(tokio::spawn(async move {
            call(&app, Method::PUT, &format!("/students/ada/progress/{n}"), json!({"graph": "latin", "status": "mastered"})).await.0
        }));
    }
    for t in tasks {
        assert_eq!(t.await.unwrap(), StatusCode::OK);
    }
    let (_, record) = call(&app, Method::GET, "/students/ada/progress", Value::Null).await;
    assert_eq!(record["entries"].as_object().unwrap().len(), ids.len());

    // Six distinct adoptions race on one popularity file.
    let closure = causal_closure(&app).await;
    let (_, ranked) = call(&app, Method::POST, "/graphs/latin/linearizations", json!({"closure": closure})).await;
    let mut tasks = Vec::new();
    for o in ranked["orders"].as_array().unwrap().clone() {
        let app = app.clone();
        let req = json!({"graph": "latin", "closure": closure, "order": o["order"], "created_at": 1});
        tasks.push(tokio::spawn(async move { call(&app, Method::POST, "/books", req).await.0 }));
    }
    for t in tasks {
        assert_eq!(t.await.unwrap(), StatusCode::OK);
    }
    let popularity = std::fs::read_to_string(dir.path().join("popularity/latin.txt")).unwrap();
    assert!(popularity.starts_with("books 6\n"), "{popularity}");
    assert_plans_valid(dir.path());
}
