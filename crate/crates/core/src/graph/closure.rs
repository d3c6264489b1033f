//! Backward visit of the prerequisite graph with optional/alternative resolution.
//!
//! Required edges are always followed, optional edges only on request, and
//! each alternative group reached is resolved to exactly one member edge.
//! Group resolution is greedy and memoized: `MinimalClosure` picks the member
//! whose own closure is smallest, which is not necessarily the globally
//! smallest closure. [`enumerate_closures`] explores every combination.

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Dag, EdgeKind, NodeId, PrerequisiteEdge};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlternativeResolution {
    /// Member with the smallest recursive closure; ties by ascending tail id.
    #[default]
    MinimalClosure,
    /// First listed node that is a member tail; falls back to `MinimalClosure`.
    PreferredList(Vec<NodeId>),
    /// Group id -> chosen member tail. Reaching an unnamed group is an error.
    Explicit(BTreeMap<String, NodeId>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosurePolicy {
    pub include_optional: bool,
    pub resolution: AlternativeResolution,
}

impl ClosurePolicy {
    pub fn minimal() -> Self {
        Self::default()
    }

    pub fn explicit(choices: BTreeMap<String, NodeId>) -> Self {
        ClosurePolicy {
            include_optional: false,
            resolution: AlternativeResolution::Explicit(choices),
        }
    }

    pub fn with_optional(mut self, include: bool) -> Self {
        self.include_optional = include;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureResult {
    pub targets: BTreeSet<NodeId>,
    pub nodes: BTreeSet<NodeId>,
    /// Every graph edge with both endpoints in `nodes`, in canonical order.
    pub induced_edges: Vec<PrerequisiteEdge>,
    pub resolved_groups: BTreeMap<String, PrerequisiteEdge>,
    pub skipped_optional: Vec<PrerequisiteEdge>,
    pub include_optional: bool,
}

impl ClosureResult {
    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains(id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Whether the edge obliges its tail to be taught before its head in this closure.
    pub fn is_obligation(&self, e: &PrerequisiteEdge) -> bool {
        match &e.alt_group {
            Some(g) => self.resolved_groups.get(g) == Some(e),
            None => e.kind != EdgeKind::Optional || self.include_optional,
        }
    }

    /// The closure restricted to `keep`; targets outside `keep` are dropped.
    pub fn restrict(&self, keep: &BTreeSet<NodeId>) -> ClosureResult {
        let inside = |e: &&PrerequisiteEdge| keep.contains(&e.tail) && keep.contains(&e.head);
        ClosureResult {
            targets: self.targets.intersection(keep).cloned().collect(),
            nodes: self.nodes.intersection(keep).cloned().collect(),
            induced_edges: self.induced_edges.iter().filter(inside).cloned().collect(),
            resolved_groups: self
                .resolved_groups
                .iter()
                .filter(|(_, e)| keep.contains(&e.head))
                .map(|(g, e)| (g.clone(), e.clone()))
                .collect(),
            skipped_optional: self
                .skipped_optional
                .iter()
                .filter(|e| keep.contains(&e.head))
                .cloned()
                .collect(),
            include_optional: self.include_optional,
        }
    }
}

/// One member of an unresolved group, with the size of its own closure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberOption {
    pub edge: PrerequisiteEdge,
    pub closure_size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoicePoint {
    pub group: String,
    pub head: NodeId,
    pub members: Vec<MemberOption>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ClosureError {
    #[error("closure needs at least one target")]
    EmptyTargets,
    #[error("unknown target node {0}")]
    UnknownTarget(NodeId),
    #[error("unknown alternative group {0}")]
    UnknownGroup(String),
    #[error("{tail} is not a member of alternative group {group}")]
    NotAMember { group: String, tail: NodeId },
    #[error("{} alternative group(s) need an explicit choice", .0.len())]
    Unresolved(Vec<ChoicePoint>),
    #[error("enumeration cap must be positive")]
    ZeroCap,
}

#[derive(Clone, Copy)]
enum Mode<'p> {
    Minimal,
    Preferred(&'p [NodeId]),
    Explicit(&'p BTreeMap<String, NodeId>),
    /// Explicit where given, minimal elsewhere; used to size choice points.
    ExplicitOrMinimal(&'p BTreeMap<String, NodeId>),
}

type NodeSet = Rc<BTreeSet<usize>>;

struct Resolver<'a, 'p> {
    dag: &'a Dag,
    include_optional: bool,
    mode: Mode<'p>,
    memo: Vec<Option<NodeSet>>,
    /// `None` marks a group reached under `Explicit` without a choice.
    choice: BTreeMap<&'a str, Option<usize>>,
}

impl<'a, 'p> Resolver<'a, 'p> {
    fn new(dag: &'a Dag, include_optional: bool, mode: Mode<'p>) -> Self {
        Resolver {
            dag,
            include_optional,
            mode,
            memo: vec![None; dag.node_count()],
            choice: BTreeMap::new(),
        }
    }

    fn closure_of(&mut self, v: usize) -> NodeSet {
        if let Some(done) = &self.memo[v] {
            return Rc::clone(done);
        }
        let dag = self.dag;
        let mut set = BTreeSet::from([v]);
        let mut groups: BTreeSet<&'a str> = BTreeSet::new();
        for &ei in dag.in_edge_indices(v) {
            let e = dag.edge_at(ei);
            let follow = match &e.alt_group {
                Some(g) => {
                    groups.insert(g.as_str());
                    false
                }
                None => e.kind != EdgeKind::Optional || self.include_optional,
            };
            if follow {
                let tail = dag.position(e.tail.as_str()).expect("validated edge");
                set.extend(self.closure_of(tail).iter().copied());
            }
        }
        for g in groups {
            if let Some(ei) = self.resolve(g) {
                let tail = dag.position(dag.edge_at(ei).tail.as_str()).expect("validated edge");
                set.extend(self.closure_of(tail).iter().copied());
            }
        }
        let set = Rc::new(set);
        self.memo[v] = Some(Rc::clone(&set));
        set
    }

    fn resolve(&mut self, group: &'a str) -> Option<usize> {
        if let Some(&c) = self.choice.get(group) {
            return c;
        }
        let members = self.dag.group_member_indices(group);
        let by_tail = |tail: &NodeId| {
            members
                .iter()
                .copied()
                .find(|&m| &self.dag.edge_at(m).tail == tail)
        };
        let pick = match self.mode {
            Mode::Minimal => Some(self.smallest_member(members)),
            Mode::Preferred(list) => list
                .iter()
                .find_map(by_tail)
                .or_else(|| Some(self.smallest_member(members))),
            Mode::Explicit(map) => map.get(group).and_then(by_tail),
            Mode::ExplicitOrMinimal(map) => map
                .get(group)
                .and_then(by_tail)
                .or_else(|| Some(self.smallest_member(members))),
        };
        self.choice.insert(group, pick);
        pick
    }

    /// Members are stored by ascending tail, so the first minimum wins ties.
    fn smallest_member(&mut self, members: &[usize]) -> usize {
        let dag = self.dag;
        let mut best: Option<(usize, usize)> = None;
        for &m in members {
            let tail = dag.position(dag.edge_at(m).tail.as_str()).expect("validated edge");
            let size = self.closure_of(tail).len();
            if best.is_none_or(|(s, _)| size < s) {
                best = Some((size, m));
            }
        }
        best.expect("validated groups have members").1
    }

    fn member_size(&mut self, edge: usize) -> usize {
        let tail = self.dag.edge_at(edge).tail.as_str();
        let tail = self.dag.position(tail).expect("validated edge");
        self.closure_of(tail).len()
    }
}

fn check_targets<'t>(
    dag: &Dag,
    targets: impl IntoIterator<Item = &'t NodeId>,
) -> Result<(BTreeSet<NodeId>, Vec<usize>), ClosureError> {
    let targets: BTreeSet<NodeId> = targets.into_iter().cloned().collect();
    if targets.is_empty() {
        return Err(ClosureError::EmptyTargets);
    }
    let positions = targets
        .iter()
        .map(|t| dag.position(t.as_str()).map_err(|_| ClosureError::UnknownTarget(t.clone())))
        .collect::<Result<_, _>>()?;
    Ok((targets, positions))
}

fn check_choices(dag: &Dag, choices: &BTreeMap<String, NodeId>) -> Result<(), ClosureError> {
    for (group, tail) in choices {
        if dag.group(group).is_none() {
            return Err(ClosureError::UnknownGroup(group.clone()));
        }
        if !dag.group_members(group).iter().any(|e| &e.tail == tail) {
            return Err(ClosureError::NotAMember {
                group: group.clone(),
                tail: tail.clone(),
            });
        }
    }
    Ok(())
}

/// Outcome of one resolver run: node set plus the groups left unresolved.
struct Visit {
    nodes: BTreeSet<usize>,
    choices: BTreeMap<String, usize>,
    unresolved: Vec<String>,
}

fn visit(dag: &Dag, targets: &[usize], include_optional: bool, mode: Mode<'_>) -> Visit {
    let mut r = Resolver::new(dag, include_optional, mode);
    let mut nodes = BTreeSet::new();
    for &t in targets {
        nodes.extend(r.closure_of(t).iter().copied());
    }
    let mut choices = BTreeMap::new();
    let mut unresolved = Vec::new();
    for (g, c) in r.choice {
        match c {
            Some(e) => {
                choices.insert(g.to_owned(), e);
            }
            None => unresolved.push(g.to_owned()),
        }
    }
    Visit {
        nodes,
        choices,
        unresolved,
    }
}

fn build_result(
    dag: &Dag,
    targets: BTreeSet<NodeId>,
    visit: &Visit,
    include_optional: bool,
) -> ClosureResult {
    let nodes: BTreeSet<NodeId> = visit.nodes.iter().map(|&i| dag.node_at(i).id.clone()).collect();
    let induced_edges = dag
        .edges()
        .iter()
        .filter(|e| nodes.contains(&e.tail) && nodes.contains(&e.head))
        .cloned()
        .collect();
    let resolved_groups = visit
        .choices
        .iter()
        .map(|(g, &e)| (g.clone(), dag.edge_at(e).clone()))
        .filter(|(_, e)| nodes.contains(&e.head))
        .collect();
    let skipped_optional = dag
        .edges()
        .iter()
        .filter(|e| {
            e.kind == EdgeKind::Optional
                && e.alt_group.is_none()
                && nodes.contains(&e.head)
                && !nodes.contains(&e.tail)
        })
        .cloned()
        .collect();
    ClosureResult {
        targets,
        nodes,
        induced_edges,
        resolved_groups,
        skipped_optional,
        include_optional,
    }
}

/// Targets plus every predecessor they oblige under `policy`.
pub fn predecessor_closure<'t>(
    dag: &Dag,
    targets: impl IntoIterator<Item = &'t NodeId>,
    policy: &ClosurePolicy,
) -> Result<ClosureResult, ClosureError> {
    let (targets, positions) = check_targets(dag, targets)?;
    let mode = match &policy.resolution {
        AlternativeResolution::MinimalClosure => Mode::Minimal,
        AlternativeResolution::PreferredList(list) => Mode::Preferred(list),
        AlternativeResolution::Explicit(map) => {
            check_choices(dag, map)?;
            Mode::Explicit(map)
        }
    };
    let v = visit(dag, &positions, policy.include_optional, mode);
    if !v.unresolved.is_empty() {
        let AlternativeResolution::Explicit(map) = &policy.resolution else {
            unreachable!("only explicit resolution leaves groups open");
        };
        return Err(ClosureError::Unresolved(choice_points(
            dag,
            &v.unresolved,
            policy.include_optional,
            map,
        )));
    }
    Ok(build_result(dag, targets, &v, policy.include_optional))
}

fn choice_points(
    dag: &Dag,
    groups: &[String],
    include_optional: bool,
    explicit: &BTreeMap<String, NodeId>,
) -> Vec<ChoicePoint> {
    let mut sizer = Resolver::new(dag, include_optional, Mode::ExplicitOrMinimal(explicit));
    groups
        .iter()
        .map(|g| ChoicePoint {
            group: g.clone(),
            head: dag.group(g).expect("group of a validated graph").head.clone(),
            members: dag
                .group_member_indices(g)
                .iter()
                .map(|&m| MemberOption {
                    edge: dag.edge_at(m).clone(),
                    closure_size: sizer.member_size(m),
                })
                .collect(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumeratedClosures {
    pub closures: Vec<ClosureResult>,
    pub truncated: bool,
}

/// Every distinct closure over all combinations of reachable group choices,
/// ordered by size and then node list, truncated at `cap`.
pub fn enumerate_closures<'t>(
    dag: &Dag,
    targets: impl IntoIterator<Item = &'t NodeId>,
    include_optional: bool,
    cap: usize,
) -> Result<EnumeratedClosures, ClosureError> {
    if cap == 0 {
        return Err(ClosureError::ZeroCap);
    }
    let (targets, positions) = check_targets(dag, targets)?;
    let mut found: BTreeMap<(usize, Vec<NodeId>), ClosureResult> = BTreeMap::new();
    let mut pending = vec![BTreeMap::<String, NodeId>::new()];
    while let Some(assignment) = pending.pop() {
        let v = visit(dag, &positions, include_optional, Mode::Explicit(&assignment));
        match v.unresolved.first() {
            None => {
                let result = build_result(dag, targets.clone(), &v, include_optional);
                let key = (result.nodes.len(), result.nodes.iter().cloned().collect());
                found.entry(key).or_insert(result);
            }
            Some(group) => {
                // Reverse push so members are explored in ascending tail order.
                for e in dag.group_members(group).into_iter().rev() {
                    let mut next = assignment.clone();
                    next.insert(group.clone(), e.tail.clone());
                    pending.push(next);
                }
            }
        }
    }
    let truncated = found.len() > cap;
    Ok(EnumeratedClosures {
        closures: found.into_values().take(cap).collect(),
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::CurriculumGraph;

    fn set(ids: &[&str]) -> BTreeSet<NodeId> {
        ids.iter().map(|s| NodeId::from(*s)).collect()
    }

    fn closure(dag: &Dag, targets: &[&str], policy: &ClosurePolicy) -> ClosureResult {
        predecessor_closure(dag, &set(targets), policy).unwrap()
    }

    #[test]
    fn chain_pulls_everything() {
        let g = CurriculumGraph::from_required_edges("t", &["a", "b", "c"], &[("a", "b"), ("b", "c")]);
        let dag = Dag::new(g).unwrap();
        assert_eq!(closure(&dag, &["c"], &ClosurePolicy::minimal()).nodes, set(&["a", "b", "c"]));
    }

    #[test]
    fn optional_skipped_by_default() {
        let g = CurriculumGraph::from_required_edges("t", &["a", "b", "c"], &[("a", "c")])
            .with_edge(PrerequisiteEdge::optional("b", "c"));
        let dag = Dag::new(g).unwrap();
        let r = closure(&dag, &["c"], &ClosurePolicy::minimal());
        assert_eq!(r.nodes, set(&["a", "c"]));
        assert_eq!(r.skipped_optional, vec![PrerequisiteEdge::optional("b", "c")]);

        let r = closure(&dag, &["c"], &ClosurePolicy::minimal().with_optional(true));
        assert_eq!(r.nodes, set(&["a", "b", "c"]));
        assert!(r.skipped_optional.is_empty());
    }

    fn grouped() -> Dag {
        // group g1 = {x->c, y->c}; y needs w
        let g = CurriculumGraph::from_required_edges("t", &["c", "w", "x", "y"], &[("w", "y")])
            .with_edge(PrerequisiteEdge::alternative("x", "c", "g1"))
            .with_edge(PrerequisiteEdge::alternative("y", "c", "g1"));
        Dag::new(g).unwrap()
    }

    #[test]
    fn minimal_picks_smaller_member() {
        let dag = grouped();
        let r = closure(&dag, &["c"], &ClosurePolicy::minimal());
        assert_eq!(r.nodes, set(&["c", "x"]));
        assert_eq!(r.resolved_groups["g1"], PrerequisiteEdge::alternative("x", "c", "g1"));

        // brute force over both members
        let sizes: Vec<usize> = ["x", "y"]
            .iter()
            .map(|t| {
                let choice = BTreeMap::from([("g1".to_owned(), NodeId::from(*t))]);
                closure(&dag, &["c"], &ClosurePolicy::explicit(choice)).len()
            })
            .collect();
        assert_eq!(sizes, vec![2, 3]);
    }

    #[test]
    fn preferred_list_overrides_size() {
        let dag = grouped();
        let policy = ClosurePolicy {
            include_optional: false,
            resolution: AlternativeResolution::PreferredList(vec![NodeId::from("y")]),
        };
        assert_eq!(closure(&dag, &["c"], &policy).nodes, set(&["c", "w", "y"]));
        let fallback = ClosurePolicy {
            include_optional: false,
            resolution: AlternativeResolution::PreferredList(vec![NodeId::from("w")]),
        };
        assert_eq!(closure(&dag, &["c"], &fallback).nodes, set(&["c", "x"]));
    }

    #[test]
    fn explicit_errors_and_choice_points() {
        let dag = grouped();
        let err = predecessor_closure(&dag, &set(&["c"]), &ClosurePolicy::explicit(BTreeMap::new()))
            .unwrap_err();
        let ClosureError::Unresolved(points) = err else {
            panic!("expected unresolved, got {err:?}")
        };
        assert_eq!(points.len(), 1);
        assert_eq!(points[0].group, "g1");
        let sizes: Vec<(String, usize)> = points[0]
            .members
            .iter()
            .map(|m| (m.edge.tail.to_string(), m.closure_size))
            .collect();
        assert_eq!(sizes, vec![("x".into(), 1), ("y".into(), 2)]);

        let bad = BTreeMap::from([("g1".to_owned(), NodeId::from("w"))]);
        assert_eq!(
            predecessor_closure(&dag, &set(&["c"]), &ClosurePolicy::explicit(bad)).unwrap_err(),
            ClosureError::NotAMember { group: "g1".into(), tail: NodeId::from("w") }
        );
        let unknown = BTreeMap::from([("g9".to_owned(), NodeId::from("x"))]);
        assert_eq!(
            predecessor_closure(&dag, &set(&["c"]), &ClosurePolicy::explicit(unknown)).unwrap_err(),
            ClosureError::UnknownGroup("g9".into())
        );
        // a group that is not reached needs no choice
        assert_eq!(
            closure(&dag, &["y"], &ClosurePolicy::explicit(BTreeMap::new())).nodes,
            set(&["w", "y"])
        );
    }

    #[test]
    fn target_errors() {
        let dag = grouped();
        assert_eq!(
            predecessor_closure(&dag, &BTreeSet::new(), &ClosurePolicy::minimal()).unwrap_err(),
            ClosureError::EmptyTargets
        );
        assert_eq!(
            predecessor_closure(&dag, &set(&["nope"]), &ClosurePolicy::minimal()).unwrap_err(),
            ClosureError::UnknownTarget(NodeId::from("nope"))
        );
    }

    #[test]
    fn enrolled_required_edge_loses_standalone_necessity() {
        let g = CurriculumGraph::from_required_edges("t", &["a", "b", "c", "z"], &[("z", "a")])
            .with_edge(PrerequisiteEdge::required("a", "c").in_group("g"))
            .with_edge(PrerequisiteEdge::alternative("b", "c", "g"));
        let dag = Dag::new(g).unwrap();
        assert_eq!(closure(&dag, &["c"], &ClosurePolicy::minimal()).nodes, set(&["b", "c"]));
    }

    #[test]
    fn enumeration_counts() {
        let chain = Dag::new(CurriculumGraph::from_required_edges("t", &["a", "b"], &[("a", "b")])).unwrap();
        let e = enumerate_closures(&chain, &set(&["b"]), false, 10).unwrap();
        assert_eq!((e.closures.len(), e.truncated), (1, false));

        let e = enumerate_closures(&grouped(), &set(&["c"]), false, 10).unwrap();
        let sets: Vec<_> = e.closures.iter().map(|c| c.nodes.clone()).collect();
        assert_eq!(sets, vec![set(&["c", "x"]), set(&["c", "w", "y"])]);

        let e = enumerate_closures(&grouped(), &set(&["c"]), false, 1).unwrap();
        assert_eq!((e.closures.len(), e.truncated), (1, true));
        assert_eq!(
            enumerate_closures(&grouped(), &set(&["c"]), false, 0).unwrap_err(),
            ClosureError::ZeroCap
        );
    }

    #[test]
    fn enumeration_of_two_groups_deduplicates() {
        // g1 = {p->h1, q->h1}, g2 = {p->h2, q->h2}, target t needs h1 and h2.
        let g = CurriculumGraph::from_required_edges(
            "t",
            &["h1", "h2", "p", "q", "t"],
            &[("h1", "t"), ("h2", "t")],
        )
        .with_edge(PrerequisiteEdge::alternative("p", "h1", "g1"))
        .with_edge(PrerequisiteEdge::alternative("q", "h1", "g1"))
        .with_edge(PrerequisiteEdge::alternative("p", "h2", "g2"))
        .with_edge(PrerequisiteEdge::alternative("q", "h2", "g2"));
        let dag = Dag::new(g).unwrap();
        // brute force over the 4 choice vectors
        let mut oracle = BTreeSet::new();
        for a in ["p", "q"] {
            for b in ["p", "q"] {
                let choice = BTreeMap::from([
                    ("g1".to_owned(), NodeId::from(a)),
                    ("g2".to_owned(), NodeId::from(b)),
                ]);
                oracle.insert(closure(&dag, &["t"], &ClosurePolicy::explicit(choice)).nodes);
            }
        }
        assert_eq!(oracle.len(), 3);
        let e = enumerate_closures(&dag, &set(&["t"]), false, 100).unwrap();
        let got: BTreeSet<_> = e.closures.iter().map(|c| c.nodes.clone()).collect();
        assert_eq!(got, oracle);
        assert_eq!(e.closures[0].len(), 4);
    }
}
