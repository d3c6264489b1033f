use std::collections::BTreeMap;

use thiserror::Error;

use super::{
    validate_graph, AltGroup, CurriculumGraph, NodeId, PrerequisiteEdge, TopicNode,
    ValidationReport,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("graph failed validation with {} error(s)", .0.errors.len())]
    Invalid(Box<ValidationReport>),
}

/// A validated curriculum graph with adjacency indexes.
///
/// Immutable once built; every query is a pure read.
#[derive(Debug, Clone)]
pub struct Dag {
    graph: CurriculumGraph,
    report: ValidationReport,
    index: BTreeMap<NodeId, usize>,
    in_edges: Vec<Vec<usize>>,
    out_edges: Vec<Vec<usize>>,
    groups: BTreeMap<String, Vec<usize>>,
}

impl Dag {
    /// Validates and indexes `graph`. Rejects any graph with validation errors.
    pub fn new(graph: CurriculumGraph) -> Result<Self, GraphError> {
        let graph = graph.canonical();
        let report = validate_graph(&graph);
        if !report.is_ok() {
            return Err(GraphError::Invalid(Box::new(report)));
        }
        let index: BTreeMap<NodeId, usize> = graph
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
        let mut in_edges = vec![Vec::new(); graph.nodes.len()];
        let mut out_edges = vec![Vec::new(); graph.nodes.len()];
        let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, e) in graph.edges.iter().enumerate() {
            in_edges[index[&e.head]].push(i);
            out_edges[index[&e.tail]].push(i);
            if let Some(g) = &e.alt_group {
                groups.entry(g.clone()).or_default().push(i);
            }
        }
        let key = |e: &PrerequisiteEdge| (e.kind, e.tail.clone(), e.head.clone());
        for list in in_edges.iter_mut().chain(out_edges.iter_mut()) {
            list.sort_by_key(|&i| key(&graph.edges[i]));
        }
        for members in groups.values_mut() {
            members.sort_by(|&a, &b| graph.edges[a].tail.cmp(&graph.edges[b].tail));
        }
        Ok(Dag {
            graph,
            report,
            index,
            in_edges,
            out_edges,
            groups,
        })
    }

    pub fn graph(&self) -> &CurriculumGraph {
        &self.graph
    }

    pub fn into_graph(self) -> CurriculumGraph {
        self.graph
    }

    /// Warnings found at construction time.
    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    pub fn discipline(&self) -> &str {
        &self.graph.discipline
    }

    pub fn node_count(&self) -> usize {
        self.graph.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edges.len()
    }

    pub fn nodes(&self) -> &[TopicNode] {
        &self.graph.nodes
    }

    pub fn edges(&self) -> &[PrerequisiteEdge] {
        &self.graph.edges
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn node(&self, id: &str) -> Option<&TopicNode> {
        self.index.get(id).map(|&i| &self.graph.nodes[i])
    }

    pub(crate) fn position(&self, id: &str) -> Result<usize, GraphError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(NodeId::from(id)))
    }

    pub(crate) fn node_at(&self, i: usize) -> &TopicNode {
        &self.graph.nodes[i]
    }

    pub(crate) fn edge_at(&self, i: usize) -> &PrerequisiteEdge {
        &self.graph.edges[i]
    }

    pub(crate) fn in_edge_indices(&self, node: usize) -> &[usize] {
        &self.in_edges[node]
    }

    pub(crate) fn group_member_indices(&self, group: &str) -> &[usize] {
        self.groups.get(group).map(Vec::as_slice).unwrap_or(&[])
    }

    /// In-edges of `id`, sorted by (kind, tail id).
    pub fn direct_predecessors(&self, id: &str) -> Result<Vec<&PrerequisiteEdge>, GraphError> {
        let i = self.position(id)?;
        Ok(self.in_edges[i].iter().map(|&e| &self.graph.edges[e]).collect())
    }

    /// Out-edges of `id`, sorted by (kind, head id).
    pub fn direct_successors(&self, id: &str) -> Result<Vec<&PrerequisiteEdge>, GraphError> {
        let i = self.position(id)?;
        let mut out: Vec<&PrerequisiteEdge> =
            self.out_edges[i].iter().map(|&e| &self.graph.edges[e]).collect();
        out.sort_by(|a, b| (a.kind, &a.head).cmp(&(b.kind, &b.head)));
        Ok(out)
    }

    pub fn group(&self, id: &str) -> Option<&AltGroup> {
        self.graph.alt_groups.get(id)
    }

    /// Member edges of group `id`, ascending by tail.
    pub fn group_members(&self, id: &str) -> Vec<&PrerequisiteEdge> {
        self.group_member_indices(id)
            .iter()
            .map(|&i| &self.graph.edges[i])
            .collect()
    }

    pub fn groups(&self) -> impl Iterator<Item = &AltGroup> {
        self.graph.alt_groups.values()
    }
}
