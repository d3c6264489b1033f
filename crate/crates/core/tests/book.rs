use std::collections::BTreeSet;

use curriculum::book::{
    assemble_book, assemble_review_book, edit_plan_in_itinere, place_exercises, render_book, review_book, AuthorRole,
    BookPlan, ContentDoc, ContentStore, EditOp, Exercise, GraphRef, MasteryStatus, PlanMeta,
};
use curriculum::graph::{predecessor_closure, ClosurePolicy, CurriculumGraph, Dag, EdgeKind, NodeId};
use curriculum::sequencing::{all_linearizations, is_valid_order, topological_order, Linearization};
use curriculum_testkit::oracle::placement_violations;
use curriculum_testkit::strategy::{dag_with_targets, exercises, progress, DagShape};
use proptest::prelude::*;
use proptest::sample::Index;

fn ids(g: &CurriculumGraph) -> Vec<NodeId> {
    g.nodes.iter().map(|n| n.id.clone()).collect()
}

fn store(g: &CurriculumGraph, ex: &[Exercise]) -> ContentStore {
    let mut s = ContentStore::new();
    let tokens = g
        .nodes
        .iter()
        .filter_map(|n| n.content_ref.clone())
        .chain(ex.iter().map(|e| e.prompt_ref.clone()));
    for t in tokens {
        s.insert(t.clone(), ContentDoc { title: t.clone(), body: format!("Text for {t}.") });
    }
    s
}

fn meta() -> PlanMeta {
    PlanMeta {
        graph: GraphRef { id: "prop".into(), version: 1 },
        title: "Property book".into(),
        created_at: 1_700_000_000,
        author_role: AuthorRole::Student,
    }
}

/// Some valid order of the closure, chosen by `pick`.
fn some_order(c: &curriculum::graph::ClosureResult, pick: Index) -> Linearization {
    let all = all_linearizations(c, 64).unwrap();
    all.orders[pick.index(all.orders.len())].clone()
}

fn plan_for(g: CurriculumGraph, targets: &BTreeSet<NodeId>, ex: &[Exercise], pick: Index) -> (Dag, BookPlan) {
    let content = store(&g, ex);
    let dag = Dag::new(g).unwrap();
    let c = predecessor_closure(&dag, targets, &ClosurePolicy::minimal()).unwrap();
    let order = some_order(&c, pick);
    let plan = assemble_book(&dag, &c, &order, ex, &content, &meta()).unwrap();
    (dag, plan)
}

fn graph_and_exercises() -> impl Strategy<Value = (CurriculumGraph, BTreeSet<NodeId>, Vec<Exercise>)> {
    dag_with_targets(DagShape::full(12)).prop_flat_map(|(g, t)| {
        let ex = exercises(ids(&g));
        (Just(g), Just(t), ex)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn placement_respects_every_exercise((g, targets, ex) in graph_and_exercises(), pick in any::<Index>()) {
        let dag = Dag::new(g).unwrap();
        let c = predecessor_closure(&dag, &targets, &ClosurePolicy::minimal()).unwrap();
        let order = some_order(&c, pick);
        let p = place_exercises(&order, &ex).unwrap();
        let problems = placement_violations(&p.items, &order.nodes, &ex);
        prop_assert!(problems.is_empty(), "{:?}", problems);
        let placed = p.items.len() - order.len();
        prop_assert_eq!(placed + p.omitted.len(), ex.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn review_covers_obligations(
        (g, gaps, record) in dag_with_targets(DagShape::full(12))
            .prop_flat_map(|(g, t)| { let p = progress(ids(&g), t.clone()); (Just(g), Just(t), p) }),
    ) {
        let dag = Dag::new(g).unwrap();
        let r = review_book(&dag, &record, &gaps, &ClosurePolicy::minimal(), false).unwrap();
        let taught: BTreeSet<&NodeId> = r.order.nodes.iter().collect();
        prop_assert!(is_valid_order(&r.closure, &r.order.nodes).is_valid());
        for t in &gaps {
            prop_assert!(taught.contains(t), "target {} dropped", t);
        }
        for n in &r.order.nodes {
            prop_assert!(gaps.contains(n) || record.status(n.as_str()) != MasteryStatus::Mastered);
        }
        for s in &r.stubs {
            prop_assert_eq!(record.status(s.as_str()), MasteryStatus::Mastered);
            prop_assert!(!taught.contains(s));
        }
        // Every obligation of a taught unit is taught earlier or cited.
        let full = predecessor_closure(&dag, &gaps, &ClosurePolicy::minimal()).unwrap();
        for e in full.induced_edges.iter().filter(|e| full.is_obligation(e)) {
            if !taught.contains(&e.head) {
                continue;
            }
            match r.order.position(e.tail.as_str()) {
                Some(i) => prop_assert!(i < r.order.position(e.head.as_str()).unwrap()),
                None => prop_assert!(r.stubs.contains(&e.tail), "{} neither taught nor cited", e.tail),
            }
        }
    }

    #[test]
    fn accepted_edits_stay_consistent(
        (g, targets, ex) in graph_and_exercises(),
        pick in any::<Index>(),
        raw in prop::collection::vec((0u8..3, any::<Index>(), any::<Index>()), 1..4),
    ) {
        let all = ids(&g);
        let (dag, plan) = plan_for(g, &targets, &ex, pick);
        let mut len = plan.order.len();
        let ops: Vec<EditOp> = raw
            .into_iter()
            .map(|(k, a, b)| {
                let node = all[a.index(all.len())].clone();
                let op = match k {
                    0 => EditOp::InsertNode { node, position: b.index(len + 1) },
                    1 => EditOp::RemoveNode { node },
                    _ => EditOp::MoveNode { node, position: b.index(len.max(1)) },
                };
                len = match k { 0 => len + 1, 1 => len.saturating_sub(1), _ => len };
                op
            })
            .collect();
        let before = plan.clone();
        let res = edit_plan_in_itinere(&plan, &dag, &ops);
        let Ok(edited) = res else {
            prop_assert_eq!(plan, before);
            return Ok(());
        };
        prop_assert!(is_valid_order(&edited.closure, &edited.order.nodes).is_valid());
        let problems = placement_violations(&edited.items, &edited.order.nodes, &edited.exercises);
        prop_assert!(problems.is_empty(), "{:?}", problems);
        // No taught unit lacks a standalone prerequisite.
        for v in &edited.order.nodes {
            for e in dag.direct_predecessors(v.as_str()).unwrap() {
                if e.alt_group.is_none() && e.kind != EdgeKind::Optional {
                    let i = edited.order.position(e.tail.as_str());
                    prop_assert!(i.is_some_and(|i| i < edited.order.position(v.as_str()).unwrap()));
                }
            }
        }
        for g in dag.groups() {
            if let Some(e) = edited.closure.resolved_groups.get(&g.id) {
                prop_assert!(edited.order.position(e.tail.as_str()).is_some());
            }
        }
    }

    #[test]
    fn rendering_and_ids_are_deterministic((g, targets, ex) in graph_and_exercises(), pick in any::<Index>()) {
        let content = store(&g, &ex);
        let (dag, plan) = plan_for(g, &targets, &ex, pick);
        let again = assemble_book(&dag, &plan.closure, &plan.order, &ex, &content, &PlanMeta { created_at: 0, ..meta() }).unwrap();
        prop_assert_eq!(&again.id, &plan.id);
        let a = render_book(&plan, &content).unwrap();
        prop_assert_eq!(&a, &render_book(&plan, &content).unwrap());
        let round = BookPlan::from_manifest(&plan.to_manifest()).unwrap();
        prop_assert_eq!(&round, &plan);
        prop_assert_eq!(render_book(&round, &content).unwrap(), a);
    }
}

#[test]
fn review_book_cites_mastered_prerequisites() {
    let g = CurriculumGraph::from_required_edges("t", &["a", "b", "c"], &[("a", "b"), ("b", "c")]);
    let content = store(&g, &[]);
    let dag = Dag::new(g).unwrap();
    let record = curriculum::book::ProgressRecord::new("s")
        .with_status("a", MasteryStatus::Mastered)
        .with_status("b", MasteryStatus::Mastered)
        .with_status("c", MasteryStatus::Gap);
    let gaps: BTreeSet<NodeId> = [NodeId::from("c")].into();
    let r = review_book(&dag, &record, &gaps, &ClosurePolicy::minimal(), false).unwrap();
    assert_eq!(r.order.nodes, vec![NodeId::from("c")]);
    assert_eq!(r.stubs, vec![NodeId::from("b")]);
    let plan = assemble_review_book(&dag, &r, &[], &content, &meta()).unwrap();
    assert_eq!(plan.units.len(), 2);
    let _ = topological_order(&plan.closure).unwrap();
}
