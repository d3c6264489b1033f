use std::collections::{BTreeMap, BTreeSet};

use curriculum::book::{Exercise, MasteryStatus, ProgressRecord};
use curriculum::graph::{CurriculumGraph, EdgeKind, NodeId, PrerequisiteEdge, TopicNode};
use proptest::prelude::*;
use proptest::sample::Index;

#[derive(Clone, Copy, Debug)]
pub struct DagShape {
    pub min_nodes: usize,
    pub max_nodes: usize,
    /// Mean out-edges per node, roughly.
    pub density: usize,
    pub optional: bool,
    pub groups: bool,
}

impl DagShape {
    /// Only required edges, no groups.
    pub fn plain(max_nodes: usize) -> Self {
        DagShape {
            min_nodes: 1,
            max_nodes,
            density: 2,
            optional: false,
            groups: false,
        }
    }

    pub fn full(max_nodes: usize) -> Self {
        DagShape {
            optional: true,
            groups: true,
            ..Self::plain(max_nodes)
        }
    }
}

/// Node ids are shuffled against topological position so id order and
/// edge direction disagree as often as they agree.
pub fn node_ids(n: usize, perm: &[usize]) -> Vec<NodeId> {
    perm.iter().take(n).map(|p| NodeId::from(format!("n{p}"))).collect()
}

fn build(
    n: usize,
    perm: Vec<usize>,
    raw: Vec<(Index, Index, u8)>,
    group_bits: Vec<bool>,
    shape: DagShape,
) -> CurriculumGraph {
    let ids = node_ids(n, &perm);
    let mut g = CurriculumGraph::new("rand");
    for (i, id) in ids.iter().enumerate() {
        let mut node = TopicNode::new(id.clone(), format!("Unit {id}"), 10 + (i as u32 * 7) % 50);
        if i % 4 != 3 {
            node.cluster = Some(format!("k{}", i % 3));
        }
        g.nodes.push(node);
    }
    let mut pairs: BTreeMap<(usize, usize), EdgeKind> = BTreeMap::new();
    for (a, b, k) in raw {
        let (a, b) = (a.index(n), b.index(n));
        if a == b {
            continue;
        }
        let kind = if shape.optional && k % 5 == 0 {
            EdgeKind::Optional
        } else {
            EdgeKind::Required
        };
        pairs.entry((a.min(b), a.max(b))).or_insert(kind);
    }
    let mut edges: Vec<PrerequisiteEdge> = pairs
        .into_iter()
        .map(|((t, h), k)| PrerequisiteEdge::new(ids[t].clone(), ids[h].clone(), k))
        .collect();
    if shape.groups {
        let mut by_head: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        for (i, e) in edges.iter().enumerate() {
            if e.kind != EdgeKind::Optional {
                by_head.entry(e.head.clone()).or_default().push(i);
            }
        }
        for (k, (head, members)) in by_head.into_iter().enumerate() {
            if members.len() < 2 || !group_bits.get(k).copied().unwrap_or(false) {
                continue;
            }
            let gid = format!("g_{head}");
            // First member stays black, the rest turn red.
            for (j, &m) in members.iter().enumerate() {
                edges[m].alt_group = Some(gid.clone());
                if j > 0 {
                    edges[m].kind = EdgeKind::Alternative;
                }
            }
        }
    }
    g.edges = edges;
    g.infer_groups();
    g
}

/// Valid random DAGs: edges always run from lower to higher topological
/// position, so every generated graph is acyclic.
pub fn dag(shape: DagShape) -> impl Strategy<Value = CurriculumGraph> {
    (shape.min_nodes..=shape.max_nodes).prop_flat_map(move |n| {
        let perm = Just((0..n).collect::<Vec<_>>()).prop_shuffle();
        let raw = prop::collection::vec((any::<Index>(), any::<Index>(), any::<u8>()), 0..=n * shape.density);
        let bits = prop::collection::vec(any::<bool>(), n);
        (Just(n), perm, raw, bits).prop_map(move |(n, perm, raw, bits)| build(n, perm, raw, bits, shape))
    })
}

/// A graph and a non-empty subset of its nodes.
pub fn dag_with_targets(shape: DagShape) -> impl Strategy<Value = (CurriculumGraph, BTreeSet<NodeId>)> {
    dag(shape).prop_flat_map(|g| {
        let n = g.nodes.len();
        let ids: Vec<NodeId> = g.nodes.iter().map(|x| x.id.clone()).collect();
        (Just(g), prop::sample::subsequence(ids, 1..=n.clamp(1, 3)))
            .prop_map(|(g, t)| (g, t.into_iter().collect()))
    })
}

/// Exercises over any graph nodes, some of which will fall outside a book.
pub fn exercises(ids: Vec<NodeId>) -> impl Strategy<Value = Vec<Exercise>> {
    let n = ids.len();
    let one = (any::<bool>(), prop::sample::subsequence(ids, 1..=n.clamp(1, 3)), prop::option::of(1u8..=5));
    prop::collection::vec(one, 0..8).prop_map(|raw| {
        raw.into_iter()
            .enumerate()
            .map(|(i, (local, nodes, difficulty))| {
                let id = format!("ex{i}");
                let mut e = if local {
                    Exercise::local(id, nodes[0].clone(), format!("p{i}"))
                } else {
                    Exercise::external(id, nodes, format!("p{i}"))
                };
                e.difficulty = difficulty;
                e
            })
            .collect()
    })
}

pub fn status() -> impl Strategy<Value = MasteryStatus> {
    prop_oneof![
        Just(MasteryStatus::Unseen),
        Just(MasteryStatus::InProgress),
        Just(MasteryStatus::Mastered),
        Just(MasteryStatus::Gap),
    ]
}

/// A progress record over `ids`; every target is marked as a gap.
pub fn progress(ids: Vec<NodeId>, gaps: BTreeSet<NodeId>) -> impl Strategy<Value = ProgressRecord> {
    prop::collection::vec(status(), ids.len()).prop_map(move |statuses| {
        let mut p = ProgressRecord::new("student");
        for (id, s) in ids.iter().zip(statuses) {
            let s = if gaps.contains(id) { MasteryStatus::Gap } else { s };
            p = p.with_status(id.as_str(), s);
        }
        p
    })
}
