use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BookError, BookPlan};
use crate::graph::{ClosureResult, Dag, EdgeKind, NodeId, PrerequisiteEdge};
use crate::sequencing::{is_valid_order, Linearization, OrderCheck};

/// One change to a plan's order. Positions index the order after the
/// node has been taken out (for moves) and may equal its length to append.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditOp {
    InsertNode { node: NodeId, position: usize },
    RemoveNode { node: NodeId },
    MoveNode { node: NodeId, position: usize },
}

#[derive(Clone, Debug, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EditRejection {
    #[error("prerequisite edge {edge} would be taught out of order")]
    ViolatedEdge { edge: PrerequisiteEdge },
    #[error("{node} needs prerequisite {prerequisite}")]
    MissingPrerequisite { node: NodeId, prerequisite: NodeId },
    #[error("{node} needs one member of alternative group {group}")]
    UnsatisfiedGroup { node: NodeId, group: String },
    #[error("unknown node {node}")]
    UnknownNode { node: NodeId },
    #[error("{node} is already in the book")]
    AlreadyPresent { node: NodeId },
    #[error("{node} is not in the book")]
    NotInPlan { node: NodeId },
    #[error("position {position} is past the end of the order")]
    PositionOutOfRange { position: usize },
    #[error("edited plan could not be rebuilt: {message}")]
    Rebuild { message: String },
}

fn apply(order: &mut Vec<NodeId>, op: &EditOp, dag: &Dag) -> Result<(), EditRejection> {
    let index_of = |order: &[NodeId], node: &NodeId| {
        order
            .iter()
            .position(|n| n == node)
            .ok_or_else(|| EditRejection::NotInPlan { node: node.clone() })
    };
    let insert_at = |order: &mut Vec<NodeId>, position: usize, node: NodeId| {
        if position > order.len() {
            return Err(EditRejection::PositionOutOfRange { position });
        }
        order.insert(position, node);
        Ok(())
    };
    match op {
        EditOp::InsertNode { node, position } => {
            if !dag.contains(node.as_str()) {
                return Err(EditRejection::UnknownNode { node: node.clone() });
            }
            if order.contains(node) {
                return Err(EditRejection::AlreadyPresent { node: node.clone() });
            }
            insert_at(order, *position, node.clone())
        }
        EditOp::RemoveNode { node } => {
            let i = index_of(order, node)?;
            order.remove(i);
            Ok(())
        }
        EditOp::MoveNode { node, position } => {
            let i = index_of(order, node)?;
            let n = order.remove(i);
            insert_at(order, *position, n)
        }
    }
}

/// Applies `ops` to a plan and re-validates it.
///
/// Prerequisites are checked against the graph (mastered stubs count as
/// present), then the new order against every induced edge. On success the
/// exercises are placed again; on failure the original plan is untouched.
/// Inserted nodes become targets; removed ones stop being targets.
pub fn edit_plan_in_itinere(plan: &BookPlan, dag: &Dag, ops: &[EditOp]) -> Result<BookPlan, EditRejection> {
    let mut order = plan.order.nodes.clone();
    let mut inserted = BTreeSet::new();
    for op in ops {
        apply(&mut order, op, dag)?;
        if let EditOp::InsertNode { node, .. } = op {
            inserted.insert(node.clone());
        }
    }
    let nodes: BTreeSet<NodeId> = order.iter().cloned().collect();
    let present = |n: &NodeId| nodes.contains(n) || plan.stubs.contains(n);

    let mut resolved_groups = BTreeMap::new();
    for v in &order {
        let preds = dag
            .direct_predecessors(v.as_str())
            .map_err(|_| EditRejection::UnknownNode { node: v.clone() })?;
        let mut groups: BTreeMap<&str, Vec<&PrerequisiteEdge>> = BTreeMap::new();
        let mut standalone: Vec<&PrerequisiteEdge> = Vec::new();
        for e in preds {
            match &e.alt_group {
                Some(g) => groups.entry(g.as_str()).or_default().push(e),
                None if e.kind != EdgeKind::Optional => standalone.push(e),
                None => {}
            }
        }
        standalone.sort_by(|a, b| a.tail.cmp(&b.tail));
        if let Some(e) = standalone.into_iter().find(|e| !present(&e.tail)) {
            return Err(EditRejection::MissingPrerequisite {
                node: v.clone(),
                prerequisite: e.tail.clone(),
            });
        }
        for (g, mut members) in groups {
            members.sort_by(|a, b| a.tail.cmp(&b.tail));
            let previous = plan.closure.resolved_groups.get(g).filter(|e| present(&e.tail));
            let chosen = previous.or_else(|| members.iter().copied().find(|e| present(&e.tail)));
            match chosen {
                Some(e) => {
                    resolved_groups.insert(g.to_owned(), e.clone());
                }
                None => {
                    return Err(EditRejection::UnsatisfiedGroup {
                        node: v.clone(),
                        group: g.to_owned(),
                    })
                }
            }
        }
    }

    let closure = ClosureResult {
        targets: plan
            .closure
            .targets
            .iter()
            .filter(|t| nodes.contains(*t))
            .cloned()
            .chain(inserted)
            .collect(),
        induced_edges: dag
            .edges()
            .iter()
            .filter(|e| nodes.contains(&e.tail) && nodes.contains(&e.head))
            .cloned()
            .collect(),
        resolved_groups,
        skipped_optional: dag
            .edges()
            .iter()
            .filter(|e| {
                e.kind == EdgeKind::Optional && e.alt_group.is_none() && nodes.contains(&e.head) && !nodes.contains(&e.tail)
            })
            .cloned()
            .collect(),
        include_optional: plan.closure.include_optional,
        nodes,
    };
    if let OrderCheck::ViolatedEdge { edge } = is_valid_order(&closure, &order) {
        return Err(EditRejection::ViolatedEdge { edge });
    }

    let mut next = plan.clone();
    for n in &order {
        if !next.units.contains_key(n) {
            let unit = dag.node(n.as_str()).expect("inserted nodes were checked").clone();
            next.units.insert(n.clone(), unit);
        }
    }
    next.units.retain(|n, _| closure.nodes.contains(n) || plan.stubs.contains(n));
    next.replace_order(closure, Linearization::new(order))
        .map_err(|e: BookError| EditRejection::Rebuild { message: e.to_string() })?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::book::plan::tests::{diamond_dag, meta, store_for};
    use crate::book::{assemble_book, BookItem, Exercise};
    use crate::graph::{predecessor_closure, ClosurePolicy};

    fn diamond_plan() -> BookPlan {
        let dag = diamond_dag();
        let cl = predecessor_closure(&dag, &[NodeId::from("d")], &ClosurePolicy::minimal()).unwrap();
        let content = store_for(&["c_a", "c_b", "c_c", "c_d", "p"]);
        let ex = [Exercise::external("x", ["b", "c"], "p")];
        assemble_book(&dag, &cl, &Linearization::from_iter(["a", "b", "c", "d"]), &ex, &content, &meta()).unwrap()
    }

    fn mv(node: &str, position: usize) -> EditOp {
        EditOp::MoveNode { node: NodeId::from(node), position }
    }

    #[test]
    fn legal_move_accepted_and_exercise_follows() {
        let plan = diamond_plan();
        let edited = edit_plan_in_itinere(&plan, &diamond_dag(), &[mv("c", 1)]).unwrap();
        assert_eq!(edited.order, Linearization::from_iter(["a", "c", "b", "d"]));
        let pos = |item: BookItem| edited.items.iter().position(|i| *i == item).unwrap();
        assert_eq!(pos(BookItem::Exercise("x".into())), pos(BookItem::Topic(NodeId::from("b"))) + 1);
        assert_ne!(edited.id, plan.id);
    }

    #[test]
    fn move_before_prerequisite_rejected() {
        let plan = diamond_plan();
        let err = edit_plan_in_itinere(&plan, &diamond_dag(), &[mv("b", 0)]).unwrap_err();
        assert_eq!(err, EditRejection::ViolatedEdge { edge: PrerequisiteEdge::required("a", "b") });
        assert_eq!(plan, diamond_plan());
    }

    #[test]
    fn removing_required_prerequisite_rejected() {
        let err = edit_plan_in_itinere(
            &diamond_plan(),
            &diamond_dag(),
            &[EditOp::RemoveNode { node: NodeId::from("b") }],
        )
        .unwrap_err();
        assert_eq!(
            err,
            EditRejection::MissingPrerequisite { node: NodeId::from("d"), prerequisite: NodeId::from("b") }
        );
    }

    #[test]
    fn insert_and_remove_round() {
        let dag = diamond_dag();
        let cl = predecessor_closure(&dag, &[NodeId::from("b")], &ClosurePolicy::minimal()).unwrap();
        let plan = assemble_book(
            &dag,
            &cl,
            &Linearization::from_iter(["a", "b"]),
            &[],
            &store_for(&["c_a", "c_b"]),
            &meta(),
        )
        .unwrap();
        let grown = edit_plan_in_itinere(
            &plan,
            &dag,
            &[EditOp::InsertNode { node: NodeId::from("c"), position: 2 }],
        )
        .unwrap();
        assert_eq!(grown.order, Linearization::from_iter(["a", "b", "c"]));
        assert!(grown.closure.targets.contains("c"));
        assert!(grown.units.contains_key("c"));

        let shrunk = edit_plan_in_itinere(&grown, &dag, &[EditOp::RemoveNode { node: NodeId::from("c") }]).unwrap();
        assert_eq!(shrunk.order, plan.order);
        assert!(!shrunk.units.contains_key("c"));

        assert!(matches!(
            edit_plan_in_itinere(&plan, &dag, &[EditOp::InsertNode { node: NodeId::from("a"), position: 0 }]),
            Err(EditRejection::AlreadyPresent { .. })
        ));
        assert!(matches!(
            edit_plan_in_itinere(&plan, &dag, &[EditOp::InsertNode { node: NodeId::from("q"), position: 0 }]),
            Err(EditRejection::UnknownNode { .. })
        ));
        assert!(matches!(
            edit_plan_in_itinere(&plan, &dag, &[mv("a", 7)]),
            Err(EditRejection::PositionOutOfRange { position: 7 })
        ));
    }
}
