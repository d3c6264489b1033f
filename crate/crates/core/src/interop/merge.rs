use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{parse_tab_lines, InteropError};
use crate::graph::{validate_graph, AltGroup, CurriculumGraph, FindingCode, NodeId, PrerequisiteEdge};
use crate::ingest::{ParseError, ParseErrors};

/// Required edge between namespaced nodes of two disciplines.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CrossEdge {
    pub tail: NodeId,
    pub head: NodeId,
}

impl CrossEdge {
    pub fn new(tail: impl Into<NodeId>, head: impl Into<NodeId>) -> Self {
        CrossEdge {
            tail: tail.into(),
            head: head.into(),
        }
    }
}

impl fmt::Display for CrossEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.tail, self.head)
    }
}

/// Cross-edge file: `tail<TAB>head`, both namespaced.
pub fn parse_cross_edges(text: &str) -> Result<Vec<CrossEdge>, ParseErrors> {
    let rows = parse_tab_lines(text, 2)?;
    let mut errors = Vec::new();
    let mut out = Vec::new();
    for (line, f) in rows {
        if f.iter().any(|id| !id.contains(':')) {
            errors.push(ParseError {
                line,
                column: 1,
                message: "cross-edge endpoints must be namespaced as discipline:id".into(),
            });
            continue;
        }
        out.push(CrossEdge::new(f[0], f[1]));
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(ParseErrors(errors))
    }
}

fn namespaced(discipline: &str, id: &str) -> String {
    format!("{discipline}:{id}")
}

/// Merges per-discipline graphs into one, namespacing node and group ids
/// as `discipline:id`, and adds the cross edges as required edges.
pub fn merge_graphs(graphs: &[CurriculumGraph], cross: &[CrossEdge]) -> Result<CurriculumGraph, InteropError> {
    let mut disciplines = BTreeSet::new();
    for g in graphs {
        if !disciplines.insert(g.discipline.as_str()) {
            return Err(InteropError::DuplicateDiscipline(g.discipline.clone()));
        }
        let report = validate_graph(g);
        if !report.is_ok() {
            return Err(InteropError::InvalidInput {
                discipline: g.discipline.clone(),
                report: Box::new(report),
            });
        }
    }

    let name = disciplines.iter().copied().collect::<Vec<_>>().join("+");
    let mut merged = CurriculumGraph::new(name);
    merged
        .metadata
        .insert("merged_from".into(), disciplines.iter().copied().collect::<Vec<_>>().join(","));
    for g in graphs {
        let d = g.discipline.as_str();
        for (k, v) in &g.metadata {
            merged.metadata.insert(format!("{d}.{k}"), v.clone());
        }
        for n in &g.nodes {
            let mut n = n.clone();
            n.id = NodeId::from(namespaced(d, n.id.as_str()));
            merged.nodes.push(n);
        }
        for e in &g.edges {
            merged.edges.push(PrerequisiteEdge {
                tail: NodeId::from(namespaced(d, e.tail.as_str())),
                head: NodeId::from(namespaced(d, e.head.as_str())),
                kind: e.kind,
                alt_group: e.alt_group.as_deref().map(|gr| namespaced(d, gr)),
            });
        }
        for grp in g.alt_groups.values() {
            let id = namespaced(d, &grp.id);
            merged.alt_groups.insert(
                id.clone(),
                AltGroup {
                    id,
                    head: NodeId::from(namespaced(d, grp.head.as_str())),
                },
            );
        }
    }

    let known: BTreeSet<&NodeId> = merged.nodes.iter().map(|n| &n.id).collect();
    for c in cross {
        if !known.contains(&c.tail) || !known.contains(&c.head) {
            return Err(InteropError::MissingEndpoint(c.clone()));
        }
        if c.tail.discipline() == c.head.discipline() {
            return Err(InteropError::SameDiscipline(c.clone()));
        }
    }
    merged
        .edges
        .extend(cross.iter().map(|c| PrerequisiteEdge::required(c.tail.clone(), c.head.clone())));
    merged.canonicalize();

    let report = validate_graph(&merged);
    if let Some(cycle) = report.errors.iter().find(|f| f.code == FindingCode::Cycle) {
        return Err(InteropError::Cycle(cycle.ids.iter().map(|s| NodeId::from(s.as_str())).collect()));
    }
    if !report.is_ok() {
        return Err(InteropError::Invalid(Box::new(report)));
    }
    Ok(merged)
}
