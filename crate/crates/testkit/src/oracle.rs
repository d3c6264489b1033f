use std::collections::{BTreeMap, BTreeSet};

use curriculum::book::{BookItem, Exercise, ExerciseKind};
use curriculum::graph::{ClosureResult, CurriculumGraph, Dag, EdgeKind, NodeId};

fn index(g: &CurriculumGraph) -> BTreeMap<&NodeId, usize> {
    g.nodes.iter().enumerate().map(|(i, n)| (&n.id, i)).collect()
}

/// Targets plus all their ancestors along followed edges, from a
/// boolean reachability matrix closed by repeated relaxation. Meant for
/// group-free graphs.
#[allow(clippy::needless_range_loop)]
pub fn ancestor_closure(g: &CurriculumGraph, targets: &BTreeSet<NodeId>, include_optional: bool) -> BTreeSet<NodeId> {
    let idx = index(g);
    let n = g.nodes.len();
    let mut reach = vec![vec![false; n]; n];
    for e in &g.edges {
        if e.kind != EdgeKind::Optional || include_optional {
            reach[idx[&e.tail]][idx[&e.head]] = true;
        }
    }
    loop {
        let mut changed = false;
        for i in 0..n {
            for k in 0..n {
                if !reach[i][k] {
                    continue;
                }
                for j in 0..n {
                    if reach[k][j] && !reach[i][j] {
                        reach[i][j] = true;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut out = targets.clone();
    for t in targets {
        let j = idx[t];
        for (i, node) in g.nodes.iter().enumerate() {
            if reach[i][j] {
                out.insert(node.id.clone());
            }
        }
    }
    out
}

/// Problems with a closure's soundness: every obligatory edge into a
/// closure node has its tail inside, and every group on a closure head has
/// its chosen member's tail inside.
pub fn closure_violations(dag: &Dag, nodes: &BTreeSet<NodeId>, resolved: &BTreeMap<String, NodeId>) -> Vec<String> {
    let mut out = Vec::new();
    for e in dag.edges() {
        if !nodes.contains(&e.head) {
            continue;
        }
        let obligatory = e.alt_group.is_none() && e.kind != EdgeKind::Optional;
        if obligatory && !nodes.contains(&e.tail) {
            out.push(format!("required edge {e} has its tail outside"));
        }
    }
    for grp in dag.groups() {
        if !nodes.contains(&grp.head) {
            continue;
        }
        match resolved.get(&grp.id) {
            Some(tail) if nodes.contains(tail) => {}
            Some(tail) => out.push(format!("group {} resolved to {tail}, which is outside", grp.id)),
            None => out.push(format!("group {} has no resolution", grp.id)),
        }
    }
    out
}

pub fn resolved_tails(c: &ClosureResult) -> BTreeMap<String, NodeId> {
    c.resolved_groups.iter().map(|(g, e)| (g.clone(), e.tail.clone())).collect()
}

/// Non-target nodes whose removal keeps the closure sound.
pub fn removable_nodes(dag: &Dag, c: &ClosureResult) -> Vec<NodeId> {
    let resolved = resolved_tails(c);
    c.nodes
        .iter()
        .filter(|n| !c.targets.contains(*n))
        .filter(|n| {
            let mut smaller = c.nodes.clone();
            smaller.remove(*n);
            let resolved: BTreeMap<String, NodeId> = resolved
                .iter()
                .filter(|(g, _)| dag.group(g).is_some_and(|grp| smaller.contains(&grp.head)))
                .map(|(g, t)| (g.clone(), t.clone()))
                .collect();
            closure_violations(dag, &smaller, &resolved).is_empty()
        })
        .cloned()
        .collect()
}

fn respects(order: &[NodeId], edges: &[(NodeId, NodeId)]) -> bool {
    let pos: BTreeMap<&NodeId, usize> = order.iter().enumerate().map(|(i, n)| (n, i)).collect();
    edges.iter().all(|(t, h)| pos[t] < pos[h])
}

fn induced(c: &ClosureResult) -> Vec<(NodeId, NodeId)> {
    c.induced_edges.iter().map(|e| (e.tail.clone(), e.head.clone())).collect()
}

/// Every permutation of the closure's nodes, kept when it respects all
/// induced edges.
pub fn permutation_linearizations(c: &ClosureResult) -> BTreeSet<Vec<NodeId>> {
    fn permute(items: &mut Vec<NodeId>, k: usize, edges: &[(NodeId, NodeId)], out: &mut BTreeSet<Vec<NodeId>>) {
        if k == items.len() {
            if respects(items, edges) {
                out.insert(items.clone());
            }
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permute(items, k + 1, edges, out);
            items.swap(k, i);
        }
    }
    let mut items: Vec<NodeId> = c.nodes.iter().cloned().collect();
    let mut out = BTreeSet::new();
    permute(&mut items, 0, &induced(c), &mut out);
    out
}

/// Number of linear extensions by dynamic programming over subsets of
/// already-placed nodes. Independent of any enumeration.
pub fn subset_count(c: &ClosureResult) -> u64 {
    let ids: Vec<&NodeId> = c.nodes.iter().collect();
    let n = ids.len();
    assert!(n <= 20, "subset oracle is exponential");
    let pos: BTreeMap<&NodeId, usize> = ids.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let mut preds = vec![0u32; n];
    for e in &c.induced_edges {
        preds[pos[&e.head]] |= 1 << pos[&e.tail];
    }
    let mut ways = vec![0u64; 1 << n];
    ways[0] = 1;
    for mask in 0..(1usize << n) {
        if ways[mask] == 0 {
            continue;
        }
        for (v, p) in preds.iter().enumerate() {
            if mask & (1 << v) == 0 && (*p as usize) & !mask == 0 {
                ways[mask | (1 << v)] += ways[mask];
            }
        }
    }
    ways[(1 << n) - 1]
}

/// Placement problems in an item list produced for `order`.
pub fn placement_violations(items: &[BookItem], order: &[NodeId], exercises: &[Exercise]) -> Vec<String> {
    let mut out = Vec::new();
    let topics: Vec<&NodeId> = items
        .iter()
        .filter_map(|i| match i {
            BookItem::Topic(n) => Some(n),
            BookItem::Exercise(_) => None,
        })
        .collect();
    if topics.iter().copied().ne(order.iter()) {
        out.push("topic projection differs from the order".to_owned());
    }
    let topic_at: BTreeMap<&NodeId, usize> = items
        .iter()
        .enumerate()
        .filter_map(|(i, it)| match it {
            BookItem::Topic(n) => Some((n, i)),
            BookItem::Exercise(_) => None,
        })
        .collect();
    let in_order: BTreeSet<&NodeId> = order.iter().collect();
    for ex in exercises {
        let at = items
            .iter()
            .position(|it| matches!(it, BookItem::Exercise(id) if *id == ex.id));
        let nodes: Vec<&NodeId> = match &ex.kind {
            ExerciseKind::NodeLocal(n) => vec![n],
            ExerciseKind::External(s) => s.iter().collect(),
        };
        let complete = nodes.iter().all(|n| in_order.contains(n));
        let Some(at) = at else {
            if complete {
                out.push(format!("{} is missing although all its nodes are taught", ex.id));
            }
            continue;
        };
        if !complete {
            out.push(format!("{} is placed although a node is missing", ex.id));
            continue;
        }
        let last = nodes.iter().map(|n| topic_at[n]).max().unwrap_or(0);
        if at <= last {
            out.push(format!("{} precedes one of its nodes", ex.id));
        }
        // Only exercises may sit between the anchor topic and this one.
        if items[last + 1..at].iter().any(|it| matches!(it, BookItem::Topic(_))) {
            out.push(format!("{} is not in the block right after its last node", ex.id));
        }
        if let ExerciseKind::External(_) = ex.kind {
            let anchor = match &items[last] {
                BookItem::Topic(n) => n,
                BookItem::Exercise(_) => unreachable!(),
            };
            let later_local = items[at + 1..]
                .iter()
                .take_while(|it| matches!(it, BookItem::Exercise(_)))
                .any(|it| match it {
                    BookItem::Exercise(id) => exercises
                        .iter()
                        .any(|e| e.id == *id && e.kind == ExerciseKind::NodeLocal(anchor.clone())),
                    BookItem::Topic(_) => false,
                });
            if later_local {
                out.push(format!("{} comes before a unit exercise of {anchor}", ex.id));
            }
        }
    }
    out
}
