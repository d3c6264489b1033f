//! Curriculum graph data model.
//!
//! A [`CurriculumGraph`] is a candidate graph as read from disk or built in
//! memory; it may violate any invariant and is checked by [`validate_graph`].
//! A [`Dag`] is the validated, indexed form every downstream operation runs on.

mod closure;
mod cycle;
mod dag;
mod validate;

use std::borrow::Borrow;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use closure::{
    enumerate_closures, predecessor_closure, AlternativeResolution, ChoicePoint, ClosureError,
    ClosurePolicy, ClosureResult, EnumeratedClosures, MemberOption,
};
pub use cycle::detect_cycle;
pub use dag::{Dag, GraphError};
pub use validate::{validate_graph, Finding, FindingCode, ValidationReport};

/// Identifier of a topic node (`[a-z0-9_:-]+`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Whether `s` is a well-formed node id token.
    pub fn is_valid(s: &str) -> bool {
        !s.is_empty()
            && s.bytes()
                .all(|b| matches!(b, b'a'..=b'z' | b'0'..=b'9' | b'_' | b':' | b'-'))
    }

    /// Discipline prefix of a namespaced id (`latin:ablativo` -> `latin`).
    pub fn discipline(&self) -> Option<&str> {
        self.0.split_once(':').map(|(d, _)| d)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

/// One self-contained teaching unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicNode {
    pub id: NodeId,
    pub title: String,
    pub cluster: Option<String>,
    pub duration_minutes: u32,
    pub page_estimate: Option<f64>,
    pub content_ref: Option<String>,
}

impl TopicNode {
    pub fn new(id: impl Into<NodeId>, title: impl Into<String>, duration_minutes: u32) -> Self {
        TopicNode {
            id: id.into(),
            title: title.into(),
            cluster: None,
            duration_minutes,
            page_estimate: None,
            content_ref: None,
        }
    }

    pub fn with_cluster(mut self, cluster: impl Into<String>) -> Self {
        self.cluster = Some(cluster.into());
        self
    }

    pub fn with_content(mut self, content_ref: impl Into<String>) -> Self {
        self.content_ref = Some(content_ref.into());
        self
    }

    pub fn with_pages(mut self, pages: f64) -> Self {
        self.page_estimate = Some(pages);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    /// Unconditional prerequisite (black).
    Required,
    /// Recommended but omissible (green).
    Optional,
    /// Necessary but substitutable within an alternative group (red).
    Alternative,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Required => "required",
            EdgeKind::Optional => "optional",
            EdgeKind::Alternative => "alternative",
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Directed prerequisite relation: `tail` must be taught before `head`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PrerequisiteEdge {
    pub tail: NodeId,
    pub head: NodeId,
    pub kind: EdgeKind,
    pub alt_group: Option<String>,
}

impl PrerequisiteEdge {
    pub fn required(tail: impl Into<NodeId>, head: impl Into<NodeId>) -> Self {
        Self::new(tail, head, EdgeKind::Required)
    }

    pub fn optional(tail: impl Into<NodeId>, head: impl Into<NodeId>) -> Self {
        Self::new(tail, head, EdgeKind::Optional)
    }

    pub fn alternative(
        tail: impl Into<NodeId>,
        head: impl Into<NodeId>,
        group: impl Into<String>,
    ) -> Self {
        Self::new(tail, head, EdgeKind::Alternative).in_group(group)
    }

    pub fn new(tail: impl Into<NodeId>, head: impl Into<NodeId>, kind: EdgeKind) -> Self {
        PrerequisiteEdge {
            tail: tail.into(),
            head: head.into(),
            kind,
            alt_group: None,
        }
    }

    /// Enrolls the edge into an alternative group.
    pub fn in_group(mut self, group: impl Into<String>) -> Self {
        self.alt_group = Some(group.into());
        self
    }

    /// Edge must be followed whenever its head is taught: required edges
    /// outside any group, and red edges that were never grouped.
    pub fn is_standalone_obligation(&self) -> bool {
        self.alt_group.is_none() && self.kind != EdgeKind::Optional
    }
}

impl fmt::Display for PrerequisiteEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.tail, self.head)
    }
}

/// Declared alternative group. Members are the edges whose `alt_group`
/// names this group; at least one member's tail must accompany `head`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AltGroup {
    pub id: String,
    pub head: NodeId,
}

/// Candidate curriculum graph, possibly invalid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CurriculumGraph {
    pub discipline: String,
    pub nodes: Vec<TopicNode>,
    pub edges: Vec<PrerequisiteEdge>,
    pub alt_groups: BTreeMap<String, AltGroup>,
    pub metadata: BTreeMap<String, String>,
}

impl CurriculumGraph {
    pub fn new(discipline: impl Into<String>) -> Self {
        CurriculumGraph {
            discipline: discipline.into(),
            ..Default::default()
        }
    }

    pub fn with_node(mut self, node: TopicNode) -> Self {
        self.nodes.push(node);
        self
    }

    pub fn with_edge(mut self, edge: PrerequisiteEdge) -> Self {
        self.edges.push(edge);
        self
    }

    /// Shorthand for tests and fixtures: nodes with 30-minute duration.
    pub fn from_required_edges(discipline: &str, nodes: &[&str], edges: &[(&str, &str)]) -> Self {
        let mut g = CurriculumGraph::new(discipline);
        for n in nodes {
            g.nodes.push(TopicNode::new(*n, n.to_string(), 30));
        }
        for (t, h) in edges {
            g.edges.push(PrerequisiteEdge::required(*t, *h));
        }
        g
    }

    pub fn node(&self, id: &str) -> Option<&TopicNode> {
        self.nodes.iter().find(|n| n.id.as_str() == id)
    }

    /// Declares every group that is referenced by an edge but not declared,
    /// taking its head from the first member edge in canonical order.
    pub fn infer_groups(&mut self) {
        let mut edges: Vec<&PrerequisiteEdge> = self.edges.iter().collect();
        edges.sort();
        for e in edges {
            if let Some(g) = &e.alt_group {
                self.alt_groups.entry(g.clone()).or_insert_with(|| AltGroup {
                    id: g.clone(),
                    head: e.head.clone(),
                });
            }
        }
    }

    /// Canonical form: nodes sorted by id, edges by (tail, head, kind),
    /// groups inferred.
    pub fn canonicalize(&mut self) {
        self.nodes.sort_by(|a, b| a.id.cmp(&b.id));
        self.edges.sort();
        self.infer_groups();
    }

    pub fn canonical(mut self) -> Self {
        self.canonicalize();
        self
    }
}
