//! On-disk state of the service.
//!
//! ```text
//! <root>/graphs/<id>/v<N>.graph   every uploaded version, native format
//! <root>/plans/<book-id>.json     plan manifests
//! <root>/progress/<student>.txt   progress records
//! <root>/popularity/<graph>.txt   adoption counts per graph
//! <root>/exercises/<graph>.txt    exercise files (optional)
//! <root>/tags/<graph>.tsv         analyzer tag indexes (optional)
//! <root>/content/manifest.tsv     content store (optional)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::Serialize;

use curriculum::book::{place_exercises, BookPlan, ContentStore, Exercise, ProgressRecord};
use curriculum::fsutil::write_atomic;
use curriculum::graph::{CurriculumGraph, Dag};
use curriculum::ingest::{load_content_store, load_exercises, parse_native, write_native};
use curriculum::interop::TagIndex;
use curriculum::sequencing::{is_valid_order, PopularityStore};

use crate::error::{ApiError, ApiResult};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GraphSummary {
    pub id: String,
    pub version: u32,
    pub discipline: String,
    pub nodes: usize,
    pub edges: usize,
}

/// What a restart must reproduce.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WorkspaceIndex {
    pub graphs: Vec<GraphSummary>,
    pub plans: BTreeSet<String>,
    pub students: BTreeSet<String>,
}

/// Per-key async queues. Holding the guard serializes writers to one resource.
#[derive(Default)]
struct Queues(Mutex<BTreeMap<String, Arc<tokio::sync::Mutex<()>>>>);

impl Queues {
    fn get(&self, key: &str) -> Arc<tokio::sync::Mutex<()>> {
        let mut map = self.0.lock().expect("queue map poisoned");
        map.entry(key.to_owned()).or_default().clone()
    }
}

pub struct Workspace {
    root: PathBuf,
    /// Graph id -> versions, index `v - 1`.
    graphs: RwLock<BTreeMap<String, Vec<Arc<Dag>>>>,
    plans: RwLock<BTreeMap<String, Arc<BookPlan>>>,
    students: RwLock<BTreeSet<String>>,
    content: ContentStore,
    uploads: tokio::sync::Mutex<()>,
    progress_queues: Queues,
    popularity_queues: Queues,
}

/// Ids that are safe as file names: letters, digits, `_ - + .`, not leading `.`.
pub fn safe_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || "_-+.".contains(c))
}

fn io(path: &Path, e: std::io::Error) -> ApiError {
    ApiError::internal(format!("{}: {e}", path.display()))
}

fn read_optional(path: &Path) -> ApiResult<Option<String>> {
    match std::fs::read_to_string(path) {
        Ok(t) => Ok(Some(t)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(io(path, e)),
    }
}

fn sorted_entries(dir: &Path) -> ApiResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    match std::fs::read_dir(dir) {
        Ok(entries) => {
            for e in entries {
                out.push(e.map_err(|e| io(dir, e))?.path());
            }
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
        Err(e) => return Err(io(dir, e)),
    }
    out.sort();
    Ok(out)
}

fn stem_with(path: &Path, ext: &str) -> Option<String> {
    let name = path.file_name()?.to_str()?;
    let stem = name.strip_suffix(ext)?;
    safe_id(stem).then(|| stem.to_owned())
}

impl Workspace {
    /// Loads every stored graph version, plan and student from `root`.
    pub fn open(root: impl Into<PathBuf>) -> ApiResult<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| io(&root, e))?;

        let mut graphs = BTreeMap::new();
        for dir in sorted_entries(&root.join("graphs"))? {
            let Some(id) = stem_with(&dir, "") else { continue };
            let mut versions = BTreeMap::new();
            for file in sorted_entries(&dir)? {
                let Some(v) = stem_with(&file, ".graph").and_then(|s| s.strip_prefix('v')?.parse::<u32>().ok()) else {
                    continue;
                };
                let text = std::fs::read_to_string(&file).map_err(|e| io(&file, e))?;
                let parsed = parse_native(&text)
                    .map_err(|e| ApiError::internal(format!("{}: {e}", file.display())))?;
                let dag = Dag::new(parsed.graph)
                    .map_err(|e| ApiError::internal(format!("{}: {e}", file.display())))?;
                versions.insert(v, Arc::new(dag));
            }
            if versions.keys().copied().ne(1..=versions.len() as u32) {
                return Err(ApiError::internal(format!("graph {id} has gaps in its version history")));
            }
            if !versions.is_empty() {
                graphs.insert(id, versions.into_values().collect());
            }
        }

        let mut plans = BTreeMap::new();
        for file in sorted_entries(&root.join("plans"))? {
            let Some(id) = stem_with(&file, ".json") else { continue };
            let text = std::fs::read_to_string(&file).map_err(|e| io(&file, e))?;
            let plan = BookPlan::from_manifest(&text)
                .map_err(|e| ApiError::internal(format!("{}: {e}", file.display())))?;
            plans.insert(id, Arc::new(plan));
        }

        let students = sorted_entries(&root.join("progress"))?
            .iter()
            .filter_map(|f| stem_with(f, ".txt"))
            .collect();

        let manifest = root.join("content").join("manifest.tsv");
        let content = if manifest.exists() { load_content_store(&manifest)? } else { ContentStore::new() };

        Ok(Workspace {
            root,
            graphs: RwLock::new(graphs),
            plans: RwLock::new(plans),
            students: RwLock::new(students),
            content,
            uploads: tokio::sync::Mutex::new(()),
            progress_queues: Queues::default(),
            popularity_queues: Queues::default(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn content(&self) -> &ContentStore {
        &self.content
    }

    pub fn index(&self) -> WorkspaceIndex {
        WorkspaceIndex {
            graphs: self.graph_summaries(),
            plans: self.plans.read().expect("plans lock").keys().cloned().collect(),
            students: self.students.read().expect("students lock").clone(),
        }
    }

    /// Every stored version of every graph.
    pub fn graph_summaries(&self) -> Vec<GraphSummary> {
        let graphs = self.graphs.read().expect("graphs lock");
        graphs
            .iter()
            .flat_map(|(id, versions)| {
                versions.iter().enumerate().map(move |(i, d)| GraphSummary {
                    id: id.clone(),
                    version: i as u32 + 1,
                    discipline: d.discipline().to_owned(),
                    nodes: d.node_count(),
                    edges: d.edge_count(),
                })
            })
            .collect()
    }

    /// A stored graph version; `None` means the latest.
    pub fn graph(&self, id: &str, version: Option<u32>) -> ApiResult<(u32, Arc<Dag>)> {
        let graphs = self.graphs.read().expect("graphs lock");
        let versions = graphs
            .get(id)
            .ok_or_else(|| ApiError::not_found("UNKNOWN_GRAPH", format!("no graph {id}")))?;
        let v = version.unwrap_or(versions.len() as u32);
        let dag = v
            .checked_sub(1)
            .and_then(|i| versions.get(i as usize))
            .ok_or_else(|| ApiError::not_found("UNKNOWN_VERSION", format!("graph {id} has no version {v}")))?;
        Ok((v, dag.clone()))
    }

    pub fn latest_version(&self, id: &str) -> Option<u32> {
        self.graphs.read().expect("graphs lock").get(id).map(|v| v.len() as u32)
    }

    /// Stores a validated graph as the next version of `id`.
    pub async fn store_graph(&self, id: &str, graph: CurriculumGraph) -> ApiResult<(u32, Arc<Dag>)> {
        if !safe_id(id) {
            return Err(ApiError::bad_request("BAD_ID", format!("graph id {id:?} is not allowed")));
        }
        let dag = Arc::new(Dag::new(graph.canonical())?);
        let _queue = self.uploads.lock().await;
        let version = self.latest_version(id).unwrap_or(0) + 1;
        let path = self.root.join("graphs").join(id).join(format!("v{version}.graph"));
        write_atomic(&path, write_native(dag.graph()).as_bytes()).map_err(|e| io(&path, e))?;
        self.graphs
            .write()
            .expect("graphs lock")
            .entry(id.to_owned())
            .or_default()
            .push(dag.clone());
        Ok((version, dag))
    }

    pub fn plan(&self, id: &str) -> ApiResult<Arc<BookPlan>> {
        self.plans
            .read()
            .expect("plans lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("UNKNOWN_BOOK", format!("no book {id}")))
    }

    /// Persists a plan after re-checking its order and placements.
    /// Returns whether the plan was new.
    pub fn store_plan(&self, plan: &BookPlan) -> ApiResult<bool> {
        let check = is_valid_order(&plan.closure, &plan.order.nodes);
        if !check.is_valid() {
            return Err(ApiError::order(&check));
        }
        let placement = place_exercises(&plan.order, &plan.exercises)?;
        if placement.items != plan.items || placement.omitted != plan.omitted {
            return Err(ApiError::internal("plan placements are inconsistent"));
        }
        if !safe_id(&plan.id) {
            return Err(ApiError::internal(format!("plan id {:?} is not storable", plan.id)));
        }
        if self.plans.read().expect("plans lock").contains_key(&plan.id) {
            return Ok(false);
        }
        let path = self.root.join("plans").join(format!("{}.json", plan.id));
        write_atomic(&path, plan.to_manifest().as_bytes()).map_err(|e| io(&path, e))?;
        let fresh = self
            .plans
            .write()
            .expect("plans lock")
            .insert(plan.id.clone(), Arc::new(plan.clone()))
            .is_none();
        Ok(fresh)
    }

    fn popularity_path(&self, graph: &str) -> PathBuf {
        self.root.join("popularity").join(format!("{graph}.txt"))
    }

    pub fn popularity(&self, graph: &str) -> ApiResult<PopularityStore> {
        let path = self.popularity_path(graph);
        PopularityStore::load(&path).map_err(|e| ApiError::internal(format!("{}: {e}", path.display())))
    }

    /// Read-modify-write of a graph's popularity file, queued per graph.
    pub async fn update_popularity(&self, graph: &str, f: impl FnOnce(&mut PopularityStore)) -> ApiResult<()> {
        let queue = self.popularity_queues.get(graph);
        let _turn = queue.lock().await;
        let mut store = self.popularity(graph)?;
        f(&mut store);
        let path = self.popularity_path(graph);
        store.save(&path).map_err(|e| ApiError::internal(format!("{}: {e}", path.display())))
    }

    fn progress_path(&self, student: &str) -> PathBuf {
        self.root.join("progress").join(format!("{student}.txt"))
    }

    pub fn progress(&self, student: &str) -> ApiResult<Option<ProgressRecord>> {
        if !safe_id(student) {
            return Err(ApiError::bad_request("BAD_ID", format!("student id {student:?} is not allowed")));
        }
        let path = self.progress_path(student);
        match read_optional(&path)? {
            None => Ok(None),
            Some(text) => ProgressRecord::parse(&text)
                .map(Some)
                .map_err(|e| ApiError::internal(format!("{}: {e}", path.display()))),
        }
    }

    /// Read-modify-write of a student's record, queued per student.
    pub async fn update_progress<F>(&self, student: &str, f: F) -> ApiResult<ProgressRecord>
    where
        F: FnOnce(Option<ProgressRecord>) -> ApiResult<ProgressRecord>,
    {
        let queue = self.progress_queues.get(student);
        let _turn = queue.lock().await;
        let next = f(self.progress(student)?)?;
        let path = self.progress_path(student);
        write_atomic(&path, next.to_text().as_bytes()).map_err(|e| io(&path, e))?;
        self.students.write().expect("students lock").insert(student.to_owned());
        Ok(next)
    }

    /// Exercises stored for a graph, checked against the given version.
    pub fn exercises(&self, graph: &str, dag: &Dag) -> ApiResult<Vec<Exercise>> {
        let path = self.root.join("exercises").join(format!("{graph}.txt"));
        if !path.exists() {
            return Ok(Vec::new());
        }
        Ok(load_exercises(&path, dag)?)
    }

    pub fn tag_index(&self, graph: &str) -> ApiResult<TagIndex> {
        let path = self.root.join("tags").join(format!("{graph}.tsv"));
        let text = read_optional(&path)?
            .ok_or_else(|| ApiError::not_found("NO_TAG_INDEX", format!("graph {graph} has no tag index")))?;
        TagIndex::parse(&text).map_err(|e| ApiError::internal(format!("{}: {e}", path.display())))
    }
}
