use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path, Query, State};
use axum::http::header;
use axum::response::IntoResponse;
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use curriculum::book::{
    assemble_book, assemble_review_book, edit_plan_in_itinere, render_book, review_book, update_progress, AuthorRole,
    EditOp, Exercise, GraphRef, MasteryStatus, PlanMeta, ProgressRecord,
};
use curriculum::graph::{predecessor_closure, ClosurePolicy, ClosureResult, Dag, NodeId};
use curriculum::ingest::{import_graphml, parse_native, ColorMap, GraphmlOptions};
use curriculum::interop::{competency_lookup, merge_graphs, process_analyzer_export, CrossEdge, TagIndex};
use curriculum::sequencing::{all_linearizations, rank_orderings, Linearization, RankingWeights};
use curriculum::fsutil::write_atomic;

use crate::error::{ApiError, ApiResult};
use crate::workspace::{safe_id, Workspace};

type Ws = State<Arc<Workspace>>;

pub fn router(ws: Arc<Workspace>) -> Router {
    Router::new()
        .route("/graphs", get(list_graphs).post(upload_graph))
        .route("/graphs/merge", post(merge))
        .route("/graphs/{id}", get(get_graph))
        .route("/graphs/{id}/nodes/{nid}", get(get_node))
        .route("/graphs/{id}/closure", post(closure))
        .route("/graphs/{id}/linearizations", post(linearizations))
        .route("/graphs/{id}/exercises", put(put_exercises))
        .route("/graphs/{id}/tags", put(put_tags))
        .route("/books", post(create_book))
        .route("/books/{id}", get(get_book))
        .route("/books/{id}/render", get(render))
        .route("/books/{id}/edits", post(edit_book))
        .route("/students/{sid}/progress", get(get_progress))
        .route("/students/{sid}/progress/{nid}", put(put_progress))
        .route("/students/{sid}/review", post(review))
        .route("/analyzer/lookup", post(lookup))
        .route("/analyzer/exercises", post(analyzer_exercises))
        .with_state(ws)
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// JSON body parsing with our error shape instead of axum's plain-text rejection.
fn body<T: serde::de::DeserializeOwned>(raw: &str) -> ApiResult<T> {
    serde_json::from_str(raw).map_err(|e| ApiError::bad_request("BAD_REQUEST", e.to_string()))
}

#[derive(Deserialize)]
struct VersionQuery {
    version: Option<u32>,
}

async fn list_graphs(State(ws): Ws) -> Json<Value> {
    let mut latest = BTreeMap::new();
    for s in ws.graph_summaries() {
        latest.insert(s.id.clone(), s);
    }
    Json(json!({ "graphs": latest.into_values().collect::<Vec<_>>() }))
}

#[derive(Deserialize)]
struct UploadQuery {
    id: Option<String>,
    format: Option<String>,
    colors: Option<String>,
}

async fn upload_graph(State(ws): Ws, Query(q): Query<UploadQuery>, text: String) -> ApiResult<Json<Value>> {
    let graphml = match q.format.as_deref() {
        Some("graphml") => true,
        Some("native") => false,
        Some(other) => return Err(ApiError::bad_request("BAD_FORMAT", format!("unknown format {other:?}"))),
        None => text.trim_start().starts_with('<'),
    };
    let (graph, report, warnings) = if graphml {
        let mut opts = GraphmlOptions::default();
        if let Some(spec) = &q.colors {
            opts.colors = ColorMap::parse(spec)?;
        }
        if let Some(id) = &q.id {
            opts.discipline = id.clone();
        }
        let imported = import_graphml(&text, &opts)?;
        let report = curriculum::graph::validate_graph(&imported.graph);
        (imported.graph, report, imported.warnings)
    } else {
        let parsed = parse_native(&text).map_err(|e| ApiError::syntax(&e))?;
        (parsed.graph, parsed.report, Vec::new())
    };
    if !report.is_ok() {
        return Err(ApiError::invalid(&report));
    }
    let id = q.id.unwrap_or_else(|| graph.discipline.clone());
    let (version, dag) = ws.store_graph(&id, graph).await?;
    Ok(Json(json!({
        "id": id,
        "version": version,
        "nodes": dag.node_count(),
        "edges": dag.edge_count(),
        "report": report,
        "warnings": warnings,
    })))
}

async fn get_graph(State(ws): Ws, Path(id): Path<String>, Query(q): Query<VersionQuery>) -> ApiResult<Json<Value>> {
    let (version, dag) = ws.graph(&id, q.version)?;
    Ok(Json(json!({ "id": id, "version": version, "graph": dag.graph() })))
}

async fn get_node(
    State(ws): Ws,
    Path((id, nid)): Path<(String, String)>,
    Query(q): Query<VersionQuery>,
) -> ApiResult<Json<Value>> {
    let (version, dag) = ws.graph(&id, q.version)?;
    let node = dag
        .node(&nid)
        .ok_or_else(|| ApiError::not_found("UNKNOWN_NODE", format!("graph {id} has no node {nid}")))?;
    Ok(Json(json!({
        "graph": id,
        "version": version,
        "node": node,
        "predecessors": dag.direct_predecessors(&nid)?,
        "successors": dag.direct_successors(&nid)?,
    })))
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum PolicyName {
    Explicit,
    Minimal,
}

#[derive(Deserialize)]
struct ClosureRequest {
    version: Option<u32>,
    targets: Vec<NodeId>,
    #[serde(default)]
    include_optional: bool,
    #[serde(default)]
    choices: BTreeMap<String, NodeId>,
    policy: Option<PolicyName>,
}

/// Defaults to the explicit policy so unresolved groups come back as 409.
async fn closure(State(ws): Ws, Path(id): Path<String>, raw: String) -> ApiResult<Json<Value>> {
    let req: ClosureRequest = body(&raw)?;
    let (version, dag) = ws.graph(&id, req.version)?;
    let policy = match req.policy.unwrap_or(PolicyName::Explicit) {
        PolicyName::Explicit => ClosurePolicy::explicit(req.choices),
        PolicyName::Minimal => ClosurePolicy::minimal(),
    }
    .with_optional(req.include_optional);
    let targets: BTreeSet<NodeId> = req.targets.into_iter().collect();
    let c = predecessor_closure(&dag, &targets, &policy)?;
    Ok(Json(json!({ "graph": id, "version": version, "closure": c })))
}

/// Recomputes `claimed` on `dag` from its own targets and choices; any
/// difference means it was computed against another graph or tampered with.
fn verify_closure(dag: &Dag, claimed: &ClosureResult) -> ApiResult<()> {
    let choices = claimed
        .resolved_groups
        .iter()
        .map(|(g, e)| (g.clone(), e.tail.clone()))
        .collect();
    let policy = ClosurePolicy::explicit(choices).with_optional(claimed.include_optional);
    match predecessor_closure(dag, &claimed.targets, &policy) {
        Ok(c) if c == *claimed => Ok(()),
        Ok(_) => Err(ApiError::conflict("STALE_CLOSURE", "closure does not match this graph version")),
        Err(e) => Err(ApiError::conflict("STALE_CLOSURE", format!("closure does not fit this graph version: {e}"))),
    }
}

#[derive(Deserialize)]
struct LinearizationRequest {
    version: Option<u32>,
    closure: ClosureResult,
    #[serde(default = "default_cap")]
    cap: usize,
    weights: Option<RankingWeights<f64>>,
}

fn default_cap() -> usize {
    100
}

async fn linearizations(State(ws): Ws, Path(id): Path<String>, raw: String) -> ApiResult<Json<Value>> {
    let req: LinearizationRequest = body(&raw)?;
    let (version, dag) = ws.graph(&id, req.version)?;
    verify_closure(&dag, &req.closure)?;
    let weights = match req.weights {
        Some(w) => RankingWeights::new(w.time, w.popularity, w.coherence)?,
        None => RankingWeights::default(),
    };
    let all = all_linearizations(&req.closure, req.cap)?;
    let ranked = rank_orderings(all.orders, &dag, &weights, &ws.popularity(&id)?)?;
    Ok(Json(json!({
        "graph": id,
        "version": version,
        "truncated": all.truncated,
        "orders": ranked,
    })))
}

async fn put_exercises(State(ws): Ws, Path(id): Path<String>, text: String) -> ApiResult<Json<Value>> {
    let (_, dag) = ws.graph(&id, None)?;
    let parsed = curriculum::ingest::parse_exercises(&text).map_err(|e| ApiError::syntax(&e))?;
    for e in &parsed {
        e.check(&dag)?;
    }
    let path = ws.root().join("exercises").join(format!("{id}.txt"));
    write_atomic(&path, text.as_bytes()).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(json!({ "graph": id, "exercises": parsed.len() })))
}

async fn put_tags(State(ws): Ws, Path(id): Path<String>, text: String) -> ApiResult<Json<Value>> {
    let (_, dag) = ws.graph(&id, None)?;
    let index = TagIndex::parse(&text).map_err(|e| ApiError::syntax(&e))?;
    index.validate(&dag)?;
    let path = ws.root().join("tags").join(format!("{id}.tsv"));
    write_atomic(&path, index.to_text().as_bytes()).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(json!({ "graph": id, "tags": index.len() })))
}

fn select_exercises(all: Vec<Exercise>, refs: Option<&[String]>) -> ApiResult<Vec<Exercise>> {
    let Some(refs) = refs else { return Ok(all) };
    let mut by_id: BTreeMap<String, Exercise> = all.into_iter().map(|e| (e.id.clone(), e)).collect();
    refs.iter()
        .map(|r| {
            by_id
                .remove(r)
                .ok_or_else(|| ApiError::bad_request("UNKNOWN_EXERCISE", format!("no exercise {r}")))
        })
        .collect()
}

#[derive(Deserialize)]
struct BookRequest {
    graph: String,
    version: Option<u32>,
    closure: ClosureResult,
    order: Vec<NodeId>,
    /// Exercise ids from the graph's exercise file; all of them when absent.
    exercises: Option<Vec<String>>,
    title: Option<String>,
    author_role: Option<AuthorRole>,
    created_at: Option<u64>,
}

/// Assembles and stores a plan; the first time a plan id is seen its order
/// counts as one adoption.
async fn create_book(State(ws): Ws, raw: String) -> ApiResult<Json<Value>> {
    let req: BookRequest = body(&raw)?;
    let (version, dag) = ws.graph(&req.graph, req.version)?;
    verify_closure(&dag, &req.closure)?;
    let exercises = select_exercises(ws.exercises(&req.graph, &dag)?, req.exercises.as_deref())?;
    let meta = PlanMeta {
        graph: GraphRef { id: req.graph.clone(), version },
        title: req.title.unwrap_or_else(|| format!("{} book", req.graph)),
        created_at: req.created_at.unwrap_or_else(now),
        author_role: req.author_role.unwrap_or(AuthorRole::Teacher),
    };
    let order = Linearization::new(req.order);
    let plan = assemble_book(&dag, &req.closure, &order, &exercises, ws.content(), &meta)?;
    if ws.store_plan(&plan)? {
        ws.update_popularity(&req.graph, |p| p.record_adoption(&plan.order)).await?;
    }
    let stored = ws.plan(&plan.id)?;
    Ok(Json(serde_json::to_value(&*stored).expect("plan serializes")))
}

async fn get_book(State(ws): Ws, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let plan = ws.plan(&id)?;
    Ok(Json(serde_json::to_value(&*plan).expect("plan serializes")))
}

async fn render(State(ws): Ws, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let plan = ws.plan(&id)?;
    let doc = render_book(&plan, ws.content())?;
    Ok(([(header::CONTENT_TYPE, "text/markdown; charset=utf-8")], doc))
}

#[derive(Deserialize)]
struct EditRequest {
    ops: Vec<EditOp>,
}

/// Edits run against the graph version the plan is pinned to.
async fn edit_book(State(ws): Ws, Path(id): Path<String>, raw: String) -> ApiResult<Json<Value>> {
    let req: EditRequest = body(&raw)?;
    let plan = ws.plan(&id)?;
    let (_, dag) = ws.graph(&plan.graph_ref.id, Some(plan.graph_ref.version))?;
    let edited = edit_plan_in_itinere(&plan, &dag, &req.ops)?;
    if let Some(token) = edited
        .order
        .nodes
        .iter()
        .filter_map(|n| dag.node(n.as_str())?.content_ref.as_deref())
        .find(|t| !ws.content().contains(t))
    {
        return Err(ApiError::bad_request("MISSING_CONTENT", format!("unresolved content token {token}")));
    }
    ws.store_plan(&edited)?;
    Ok(Json(serde_json::to_value(&edited).expect("plan serializes")))
}

async fn get_progress(State(ws): Ws, Path(sid): Path<String>) -> ApiResult<Json<ProgressRecord>> {
    ws.progress(&sid)?
        .map(Json)
        .ok_or_else(|| ApiError::not_found("NO_PROGRESS", format!("no progress for {sid}")))
}

#[derive(Deserialize)]
struct ProgressRequest {
    graph: String,
    status: MasteryStatus,
}

async fn put_progress(
    State(ws): Ws,
    Path((sid, nid)): Path<(String, String)>,
    raw: String,
) -> ApiResult<Json<ProgressRecord>> {
    let req: ProgressRequest = body(&raw)?;
    let (_, dag) = ws.graph(&req.graph, None)?;
    let record = ws
        .update_progress(&sid, |current| {
            let current = current.unwrap_or_else(|| ProgressRecord {
                graph: Some(req.graph.clone()),
                ..ProgressRecord::new(sid.clone())
            });
            if current.graph.as_deref().is_some_and(|g| g != req.graph) {
                return Err(ApiError::conflict(
                    "GRAPH_MISMATCH",
                    format!("student {sid} tracks progress on another graph"),
                ));
            }
            Ok(update_progress(&current, &dag, &nid, req.status, now())?)
        })
        .await?;
    Ok(Json(record))
}

#[derive(Deserialize)]
struct ReviewRequest {
    gaps: Vec<NodeId>,
    #[serde(default)]
    allow_non_gap: bool,
    #[serde(default)]
    include_optional: bool,
    exercises: Option<Vec<String>>,
    title: Option<String>,
    created_at: Option<u64>,
}

async fn review(State(ws): Ws, Path(sid): Path<String>, raw: String) -> ApiResult<Json<Value>> {
    let req: ReviewRequest = body(&raw)?;
    let record = ws
        .progress(&sid)?
        .ok_or_else(|| ApiError::not_found("NO_PROGRESS", format!("no progress for {sid}")))?;
    let graph = record
        .graph
        .clone()
        .ok_or_else(|| ApiError::conflict("GRAPH_MISMATCH", "progress record names no graph"))?;
    let (version, dag) = ws.graph(&graph, None)?;
    let gaps: BTreeSet<NodeId> = req.gaps.into_iter().collect();
    let policy = ClosurePolicy::minimal().with_optional(req.include_optional);
    let selection = review_book(&dag, &record, &gaps, &policy, req.allow_non_gap)?;
    let exercises = select_exercises(ws.exercises(&graph, &dag)?, req.exercises.as_deref())?;
    let meta = PlanMeta {
        graph: GraphRef { id: graph.clone(), version },
        title: req.title.unwrap_or_else(|| format!("Review for {sid}")),
        created_at: req.created_at.unwrap_or_else(now),
        author_role: AuthorRole::Student,
    };
    let plan = assemble_review_book(&dag, &selection, &exercises, ws.content(), &meta)?;
    ws.store_plan(&plan)?;
    let stored = ws.plan(&plan.id)?;
    Ok(Json(serde_json::to_value(&*stored).expect("plan serializes")))
}

#[derive(Deserialize)]
struct MergeRequest {
    graphs: Vec<String>,
    #[serde(default)]
    cross_edges: Vec<CrossEdge>,
    id: Option<String>,
}

async fn merge(State(ws): Ws, raw: String) -> ApiResult<Json<Value>> {
    let req: MergeRequest = body(&raw)?;
    let inputs = req
        .graphs
        .iter()
        .map(|g| ws.graph(g, None).map(|(_, d)| d.graph().clone()))
        .collect::<ApiResult<Vec<_>>>()?;
    let merged = merge_graphs(&inputs, &req.cross_edges)?;
    let id = req.id.unwrap_or_else(|| merged.discipline.clone());
    if !safe_id(&id) {
        return Err(ApiError::bad_request("BAD_ID", format!("graph id {id:?} is not allowed")));
    }
    let (version, dag) = ws.store_graph(&id, merged).await?;
    Ok(Json(json!({ "id": id, "version": version, "graph": dag.graph(), "report": dag.report() })))
}

#[derive(Deserialize)]
struct LookupRequest {
    graph: String,
    tags: Vec<String>,
}

async fn lookup(State(ws): Ws, raw: String) -> ApiResult<Json<Value>> {
    let req: LookupRequest = body(&raw)?;
    let (version, dag) = ws.graph(&req.graph, None)?;
    let index = ws.tag_index(&req.graph)?;
    let report = competency_lookup(&index, &req.tags, &dag)?;
    Ok(Json(json!({ "graph": req.graph, "version": version, "report": report })))
}

#[derive(Deserialize)]
struct AnalyzerRequest {
    graph: String,
    /// Analyzer export text, `form<TAB>tag[,tag…]` per line.
    export: String,
}

async fn analyzer_exercises(State(ws): Ws, raw: String) -> ApiResult<Json<Value>> {
    let req: AnalyzerRequest = body(&raw)?;
    let (version, dag) = ws.graph(&req.graph, None)?;
    let index = ws.tag_index(&req.graph)?;
    let batch = process_analyzer_export(&index, &req.export, &dag)?;
    Ok(Json(json!({ "graph": req.graph, "version": version, "batch": batch })))
}
