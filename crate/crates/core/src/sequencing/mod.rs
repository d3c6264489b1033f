//! Teaching orders over a closure: deterministic topological order,
//! enumeration and counting of linear extensions, validity checks and ranking.

mod enumerate;
mod order;
mod popularity;
mod rank;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeId, PrerequisiteEdge};

pub use enumerate::{all_linearizations, count_linearizations, LinearizationCount, Linearizations};
pub use order::{is_valid_order, topological_order, OrderCheck};
pub use popularity::{PopularityError, PopularityStore};
pub use rank::{rank_orderings, score_ordering, RankedOrdering, RankingWeights, ScoreBreakdown};

/// Default cap for [`all_linearizations`].
pub const DEFAULT_ENUMERATION_CAP: usize = 1000;
/// Default cap for [`count_linearizations`].
pub const DEFAULT_COUNT_CAP: u64 = 1_000_000;

/// A total order of closure nodes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Linearization {
    pub nodes: Vec<NodeId>,
}

impl Linearization {
    pub fn new(nodes: Vec<NodeId>) -> Self {
        Linearization { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.as_str() == id)
    }
}

impl<S: Into<NodeId>> FromIterator<S> for Linearization {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Linearization::new(iter.into_iter().map(Into::into).collect())
    }
}

impl fmt::Display for Linearization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.nodes.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SequencingError {
    #[error("closure is corrupt: {0}")]
    Corrupt(String),
    #[error("cap must be at least 1")]
    ZeroCap,
    #[error("ranking weights must be finite, non-negative and not all zero")]
    InvalidWeights,
    #[error("ordering names unknown node {0}")]
    UnknownNode(NodeId),
}

/// Index form of a closure: ids ascending, successor lists from induced edges.
pub(crate) struct Poset {
    pub ids: Vec<NodeId>,
    pub succs: Vec<Vec<usize>>,
    pub indegree: Vec<usize>,
}

impl Poset {
    pub fn new<'e>(
        nodes: impl IntoIterator<Item = &'e NodeId>,
        edges: impl IntoIterator<Item = &'e PrerequisiteEdge>,
    ) -> Result<Self, SequencingError> {
        let mut ids: Vec<NodeId> = nodes.into_iter().cloned().collect();
        ids.sort();
        ids.dedup();
        let mut succs = vec![Vec::new(); ids.len()];
        let mut indegree = vec![0; ids.len()];
        for e in edges {
            let at = |id: &NodeId| {
                ids.binary_search(id)
                    .map_err(|_| SequencingError::Corrupt(format!("edge {e} leaves the node set")))
            };
            let (t, h) = (at(&e.tail)?, at(&e.head)?);
            if !succs[t].contains(&h) {
                succs[t].push(h);
                indegree[h] += 1;
            }
        }
        Ok(Poset {
            ids,
            succs,
            indegree,
        })
    }

    pub fn check_acyclic(&self) -> Result<(), SequencingError> {
        let mut indegree = self.indegree.clone();
        let mut stack: Vec<usize> = (0..self.ids.len()).filter(|&i| indegree[i] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for &w in &self.succs[v] {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    stack.push(w);
                }
            }
        }
        if seen == self.ids.len() {
            Ok(())
        } else {
            Err(SequencingError::Corrupt("induced edges contain a cycle".into()))
        }
    }
}
