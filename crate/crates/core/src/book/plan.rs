use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    place_exercises, BookError, BookItem, ContentStore, Exercise, OmittedExercise, ReviewSelection,
};
use crate::graph::{ClosureResult, Dag, NodeId, TopicNode};
use crate::sequencing::{is_valid_order, Linearization};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthorRole {
    Teacher,
    Student,
}

/// Graph identity a plan is pinned to.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GraphRef {
    pub id: String,
    pub version: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanMeta {
    pub graph: GraphRef,
    pub title: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub author_role: AuthorRole,
}

/// The skeleton of one personalized book. Field order is the manifest order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BookPlan {
    pub id: String,
    pub title: String,
    pub graph_ref: GraphRef,
    pub created_at: u64,
    pub author_role: AuthorRole,
    pub closure: ClosureResult,
    pub order: Linearization,
    /// Mastered prerequisites cited without full content (review books).
    pub stubs: Vec<NodeId>,
    pub items: Vec<BookItem>,
    pub omitted: Vec<OmittedExercise>,
    /// Every exercise offered to the plan, placed or omitted, by id.
    pub exercises: Vec<Exercise>,
    /// Snapshot of the units the book teaches or cites.
    pub units: BTreeMap<NodeId, TopicNode>,
}

impl BookPlan {
    pub fn exercise(&self, id: &str) -> Option<&Exercise> {
        self.exercises.iter().find(|e| e.id == id)
    }

    pub fn total_minutes(&self) -> u64 {
        self.order
            .nodes
            .iter()
            .filter_map(|n| self.units.get(n))
            .map(|u| u64::from(u.duration_minutes))
            .sum()
    }

    /// Topic items in book order, exercises stripped.
    pub fn topic_projection(&self) -> Vec<NodeId> {
        self.items
            .iter()
            .filter_map(|i| match i {
                BookItem::Topic(n) => Some(n.clone()),
                BookItem::Exercise(_) => None,
            })
            .collect()
    }

    pub fn to_manifest(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }

    pub fn from_manifest(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Content hash over graph identity, unit order, stubs and placed exercises.
    pub(crate) fn compute_id(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.graph_ref.id.as_bytes());
        h.update(b"\n");
        h.update(self.graph_ref.version.to_string().as_bytes());
        h.update(b"\n");
        for item in &self.items {
            match item {
                BookItem::Topic(n) => {
                    h.update(b"t:");
                    h.update(n.as_str().as_bytes());
                }
                BookItem::Exercise(e) => {
                    h.update(b"x:");
                    h.update(e.as_bytes());
                }
            }
            h.update(b" ");
        }
        h.update(b"\nstubs:");
        for s in &self.stubs {
            h.update(s.as_str().as_bytes());
            h.update(b" ");
        }
        let digest = h.finalize();
        let mut id = String::from("book-");
        for b in &digest[..8] {
            write!(id, "{b:02x}").expect("writing to a String");
        }
        id
    }

    /// Re-derives placements and id after the order changed.
    pub(crate) fn replace_order(&mut self, closure: ClosureResult, order: Linearization) -> Result<(), BookError> {
        let placement = place_exercises(&order, &self.exercises)?;
        self.closure = closure;
        self.order = order;
        self.items = placement.items;
        self.omitted = placement.omitted;
        self.id = self.compute_id();
        Ok(())
    }
}

fn missing_content(
    dag: &Dag,
    order: &Linearization,
    items: &[BookItem],
    exercises: &[Exercise],
    content: &ContentStore,
) -> Vec<String> {
    let mut missing = BTreeSet::new();
    for n in &order.nodes {
        if let Some(token) = dag.node(n.as_str()).and_then(|u| u.content_ref.as_deref()) {
            if !content.contains(token) {
                missing.insert(token.to_owned());
            }
        }
    }
    let placed: BTreeSet<&str> = items
        .iter()
        .filter_map(|i| match i {
            BookItem::Exercise(e) => Some(e.as_str()),
            BookItem::Topic(_) => None,
        })
        .collect();
    for e in exercises.iter().filter(|e| placed.contains(e.id.as_str())) {
        if !content.contains(&e.prompt_ref) {
            missing.insert(e.prompt_ref.clone());
        }
    }
    missing.into_iter().collect()
}

fn assemble(
    dag: &Dag,
    closure: &ClosureResult,
    order: &Linearization,
    stubs: Vec<NodeId>,
    exercises: &[Exercise],
    content: &ContentStore,
    meta: &PlanMeta,
) -> Result<BookPlan, BookError> {
    let check = is_valid_order(closure, &order.nodes);
    if !check.is_valid() {
        return Err(BookError::OrderMismatch(check));
    }
    for ex in exercises {
        ex.check(dag)?;
    }
    let placement = place_exercises(order, exercises)?;
    let missing = missing_content(dag, order, &placement.items, exercises, content);
    if !missing.is_empty() {
        return Err(BookError::MissingContent(missing));
    }
    let units = order
        .nodes
        .iter()
        .chain(&stubs)
        .map(|n| {
            dag.node(n.as_str())
                .map(|u| (n.clone(), u.clone()))
                .ok_or_else(|| BookError::UnknownGraphNode(n.clone()))
        })
        .collect::<Result<_, _>>()?;
    let mut exercises = exercises.to_vec();
    exercises.sort_by(|a, b| a.id.cmp(&b.id));
    let mut plan = BookPlan {
        id: String::new(),
        title: meta.title.clone(),
        graph_ref: meta.graph.clone(),
        created_at: meta.created_at,
        author_role: meta.author_role,
        closure: closure.clone(),
        order: order.clone(),
        stubs,
        items: placement.items,
        omitted: placement.omitted,
        exercises,
        units,
    };
    plan.id = plan.compute_id();
    Ok(plan)
}

/// Binds a serialized closure to content and places the exercises.
pub fn assemble_book(
    dag: &Dag,
    closure: &ClosureResult,
    order: &Linearization,
    exercises: &[Exercise],
    content: &ContentStore,
    meta: &PlanMeta,
) -> Result<BookPlan, BookError> {
    assemble(dag, closure, order, Vec::new(), exercises, content, meta)
}

/// Like [`assemble_book`] for a review selection; stubs are cited, not taught.
pub fn assemble_review_book(
    dag: &Dag,
    review: &ReviewSelection,
    exercises: &[Exercise],
    content: &ContentStore,
    meta: &PlanMeta,
) -> Result<BookPlan, BookError> {
    assemble(
        dag,
        &review.closure,
        &review.order,
        review.stubs.clone(),
        exercises,
        content,
        meta,
    )
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::book::ContentDoc;
    use crate::graph::{predecessor_closure, ClosurePolicy, CurriculumGraph, TopicNode};

    pub(crate) fn diamond_dag() -> Dag {
        let mut g = CurriculumGraph::new("t");
        for id in ["a", "b", "c", "d"] {
            g.nodes.push(TopicNode::new(id, format!("Unit {id}"), 30).with_content(format!("c_{id}")));
        }
        for (t, h) in [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")] {
            g.edges.push(crate::graph::PrerequisiteEdge::required(t, h));
        }
        Dag::new(g).unwrap()
    }

    pub(crate) fn store_for(tokens: &[&str]) -> ContentStore {
        let mut s = ContentStore::new();
        for t in tokens {
            s.insert(*t, ContentDoc { title: format!("Doc {t}"), body: format!("Body of {t}.") });
        }
        s
    }

    pub(crate) fn meta() -> PlanMeta {
        PlanMeta {
            graph: GraphRef { id: "t".into(), version: 1 },
            title: "Test book".into(),
            created_at: 0,
            author_role: AuthorRole::Teacher,
        }
    }

    fn names(items: &[BookItem]) -> Vec<String> {
        items
            .iter()
            .map(|i| match i {
                BookItem::Topic(n) => n.to_string(),
                BookItem::Exercise(e) => e.clone(),
            })
            .collect()
    }

    #[test]
    fn diamond_with_external_exercise() {
        let dag = diamond_dag();
        let cl = predecessor_closure(&dag, &[NodeId::from("d")], &ClosurePolicy::minimal()).unwrap();
        let order = Linearization::from_iter(["a", "b", "c", "d"]);
        let content = store_for(&["c_a", "c_b", "c_c", "c_d", "p_ex"]);
        let ex = [Exercise::external("ex", ["b", "c"], "p_ex")];
        let plan = assemble_book(&dag, &cl, &order, &ex, &content, &meta()).unwrap();
        assert_eq!(names(&plan.items), vec!["a", "b", "c", "ex", "d"]);
        assert_eq!(plan.topic_projection(), order.nodes);
        assert!(plan.id.starts_with("book-"));

        let again = assemble_book(&dag, &cl, &order, &ex, &content, &PlanMeta { created_at: 99, ..meta() }).unwrap();
        assert_eq!(again.id, plan.id, "id ignores the timestamp");
        let round = BookPlan::from_manifest(&plan.to_manifest()).unwrap();
        assert_eq!(round, plan);
    }

    #[test]
    fn single_node_plan() {
        let dag = diamond_dag();
        let cl = predecessor_closure(&dag, &[NodeId::from("a")], &ClosurePolicy::minimal()).unwrap();
        let plan = assemble_book(&dag, &cl, &Linearization::from_iter(["a"]), &[], &store_for(&["c_a"]), &meta()).unwrap();
        assert_eq!(plan.items, vec![BookItem::Topic(NodeId::from("a"))]);
    }

    #[test]
    fn missing_tokens_listed() {
        let dag = diamond_dag();
        let cl = predecessor_closure(&dag, &[NodeId::from("b")], &ClosurePolicy::minimal()).unwrap();
        let ex = [Exercise::local("e1", "b", "p_missing")];
        let err = assemble_book(&dag, &cl, &Linearization::from_iter(["a", "b"]), &ex, &store_for(&["c_a"]), &meta())
            .unwrap_err();
        assert_eq!(err, BookError::MissingContent(vec!["c_b".into(), "p_missing".into()]));
    }

    #[test]
    fn order_mismatch_and_unknown_node() {
        let dag = diamond_dag();
        let cl = predecessor_closure(&dag, &[NodeId::from("b")], &ClosurePolicy::minimal()).unwrap();
        let content = store_for(&["c_a", "c_b"]);
        let err = assemble_book(&dag, &cl, &Linearization::from_iter(["b", "a"]), &[], &content, &meta()).unwrap_err();
        assert!(matches!(err, BookError::OrderMismatch(_)));
        let ex = [Exercise::external("e", ["a", "nope"], "p")];
        let err = assemble_book(&dag, &cl, &Linearization::from_iter(["a", "b"]), &ex, &content, &meta()).unwrap_err();
        assert_eq!(err, BookError::UnknownNode { exercise: "e".into(), node: NodeId::from("nope") });
    }
}
