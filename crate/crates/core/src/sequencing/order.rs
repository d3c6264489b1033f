use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Linearization, Poset, SequencingError};
use crate::graph::{ClosureResult, NodeId, PrerequisiteEdge};

/// Kahn's algorithm, always emitting the smallest ready id.
pub fn topological_order(closure: &ClosureResult) -> Result<Linearization, SequencingError> {
    let Poset {
        ids,
        succs,
        mut indegree,
    } = Poset::new(&closure.nodes, &closure.induced_edges)?;
    let mut ready: BTreeSet<usize> = (0..ids.len()).filter(|&i| indegree[i] == 0).collect();
    let mut out = Vec::with_capacity(ids.len());
    while let Some(v) = ready.pop_first() {
        out.push(ids[v].clone());
        for &w in &succs[v] {
            indegree[w] -= 1;
            if indegree[w] == 0 {
                ready.insert(w);
            }
        }
    }
    if out.len() != ids.len() {
        return Err(SequencingError::Corrupt("induced edges contain a cycle".into()));
    }
    Ok(Linearization::new(out))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OrderCheck {
    Valid,
    NotPermutation {
        missing: Vec<NodeId>,
        unexpected: Vec<NodeId>,
        duplicated: Vec<NodeId>,
    },
    ViolatedEdge {
        edge: PrerequisiteEdge,
    },
}

impl OrderCheck {
    pub fn is_valid(&self) -> bool {
        matches!(self, OrderCheck::Valid)
    }
}

/// Checks that `order` is a permutation of the closure respecting every
/// induced edge. Reports the first violation met scanning the order front
/// to back: the earliest-placed head whose prerequisite comes later.
pub fn is_valid_order(closure: &ClosureResult, order: &[NodeId]) -> OrderCheck {
    let mut position: BTreeMap<&NodeId, usize> = BTreeMap::new();
    let mut duplicated = BTreeSet::new();
    let mut unexpected = BTreeSet::new();
    for (i, n) in order.iter().enumerate() {
        if position.insert(n, i).is_some() {
            duplicated.insert(n.clone());
        }
        if !closure.nodes.contains(n) {
            unexpected.insert(n.clone());
        }
    }
    let missing: Vec<NodeId> = closure
        .nodes
        .iter()
        .filter(|n| !position.contains_key(n))
        .cloned()
        .collect();
    if !(missing.is_empty() && unexpected.is_empty() && duplicated.is_empty()) {
        return OrderCheck::NotPermutation {
            missing,
            unexpected: unexpected.into_iter().collect(),
            duplicated: duplicated.into_iter().collect(),
        };
    }
    let mut by_head: BTreeMap<&NodeId, Vec<&PrerequisiteEdge>> = BTreeMap::new();
    for e in &closure.induced_edges {
        by_head.entry(&e.head).or_default().push(e);
    }
    for (i, n) in order.iter().enumerate() {
        let Some(incoming) = by_head.get_mut(n) else {
            continue;
        };
        incoming.sort_by(|a, b| a.tail.cmp(&b.tail));
        if let Some(e) = incoming.iter().find(|e| position[&e.tail] > i) {
            return OrderCheck::ViolatedEdge { edge: (*e).clone() };
        }
    }
    OrderCheck::Valid
}
