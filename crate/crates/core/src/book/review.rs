use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{BookError, MasteryStatus, ProgressRecord};
use crate::graph::{predecessor_closure, ClosurePolicy, ClosureResult, Dag, NodeId};
use crate::sequencing::{topological_order, Linearization};

/// Inputs for a review book: the units to teach, their order, and the
/// mastered prerequisites to cite as stubs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewSelection {
    /// Closure restricted to the fully taught units.
    pub closure: ClosureResult,
    pub order: Linearization,
    pub stubs: Vec<NodeId>,
}

/// Builds a review selection for a student's gaps.
///
/// The closure of the gaps loses its mastered nodes; a mastered node stays as
/// a stub when it is an obligatory prerequisite of a unit still taught.
/// Targets are always taught in full. With `allow_non_gap` unset, each target
/// must currently be marked as a gap.
pub fn review_book(
    dag: &Dag,
    progress: &ProgressRecord,
    gap_targets: &BTreeSet<NodeId>,
    policy: &ClosurePolicy,
    allow_non_gap: bool,
) -> Result<ReviewSelection, BookError> {
    progress.check(dag)?;
    if !allow_non_gap {
        for t in gap_targets {
            match progress.status(t.as_str()) {
                MasteryStatus::Gap => {}
                MasteryStatus::Mastered => return Err(BookError::TargetMastered(t.clone())),
                status => {
                    return Err(BookError::TargetNotGap {
                        node: t.clone(),
                        status,
                    })
                }
            }
        }
    }
    let full = predecessor_closure(dag, gap_targets, policy)?;
    let mastered =
        |n: &NodeId| progress.status(n.as_str()) == MasteryStatus::Mastered && !full.targets.contains(n);
    let retained: BTreeSet<NodeId> = full.nodes.iter().filter(|n| !mastered(n)).cloned().collect();
    let stubs: BTreeSet<NodeId> = full
        .induced_edges
        .iter()
        .filter(|e| retained.contains(&e.head) && mastered(&e.tail) && full.is_obligation(e))
        .map(|e| e.tail.clone())
        .collect();
    let closure = full.restrict(&retained);
    let order = topological_order(&closure)?;
    Ok(ReviewSelection {
        closure,
        order,
        stubs: stubs.into_iter().collect(),
    })
}
