use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use super::{parse_tab_lines, CrossEdge, InteropError};
use crate::graph::{Dag, NodeId};
use crate::ingest::{ParseError, ParseErrors};
use crate::sequencing::Linearization;

/// Joint teaching calendar: (discipline, 1-based order position) to week.
pub type Calendar = BTreeMap<(String, usize), u32>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SyncStatus {
    Satisfiable,
    /// The fixed orders plus the cross edges force head before tail.
    Unsatisfiable,
    /// The calendar teaches head in an earlier week than tail.
    Violated,
    /// Tail or head is missing from its discipline's order.
    Unscheduled,
}

impl SyncStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SyncStatus::Satisfiable => "SATISFIABLE",
            SyncStatus::Unsatisfiable => "UNSATISFIABLE",
            SyncStatus::Violated => "VIOLATED",
            SyncStatus::Unscheduled => "UNSCHEDULED",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SyncFinding {
    pub edge: CrossEdge,
    pub status: SyncStatus,
    /// 1-based position of tail in its own discipline's order.
    pub tail_position: Option<usize>,
    /// 1-based position in head's discipline order before which tail
    /// must have been covered.
    pub cover_before: Option<usize>,
    pub tail_week: Option<u32>,
    pub head_week: Option<u32>,
}

/// Orders file: `discipline<TAB>id,id,…`. Ids without a `discipline:`
/// prefix get the line's discipline.
pub fn parse_orders(text: &str) -> Result<BTreeMap<String, Linearization>, ParseErrors> {
    let mut out = BTreeMap::new();
    let mut errors = Vec::new();
    for (line, f) in parse_tab_lines(text, 2)? {
        let d = f[0];
        let prefix = format!("{d}:");
        let lin: Linearization = f[1]
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|id| {
                if id.contains(':') {
                    NodeId::from(id)
                } else {
                    NodeId::from(format!("{prefix}{id}"))
                }
            })
            .collect();
        if out.insert(d.to_owned(), lin).is_some() {
            errors.push(ParseError {
                line,
                column: 1,
                message: format!("second order for {d}"),
            });
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(ParseErrors(errors))
    }
}

/// Calendar file: `discipline<TAB>position<TAB>week`, positions 1-based.
pub fn parse_calendar(text: &str) -> Result<Calendar, ParseErrors> {
    let mut cal = Calendar::new();
    let mut errors = Vec::new();
    for (line, f) in parse_tab_lines(text, 3)? {
        let err = |message: String| ParseError { line, column: 1, message };
        match (f[1].parse::<usize>(), f[2].parse::<u32>()) {
            (Ok(pos), Ok(week)) if pos >= 1 => {
                if cal.insert((f[0].to_owned(), pos), week).is_some() {
                    errors.push(err(format!("position {pos} of {} scheduled twice", f[0])));
                }
            }
            _ => errors.push(err("position must be ≥ 1 and week a whole number".into())),
        }
    }
    if errors.is_empty() {
        Ok(cal)
    } else {
        Err(ParseErrors(errors))
    }
}

fn reaches(adj: &BTreeMap<&NodeId, BTreeSet<&NodeId>>, from: &NodeId, to: &NodeId) -> bool {
    let mut seen = BTreeSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(n) = queue.pop_front() {
        if n == to {
            return true;
        }
        for m in adj.get(n).into_iter().flatten() {
            if seen.insert(*m) {
                queue.push_back(*m);
            }
        }
    }
    false
}

/// Checks every cross-discipline edge of `merged` against per-discipline
/// orders and, optionally, a joint calendar. Findings are sorted by edge.
pub fn sync_report(
    merged: &Dag,
    orders: &BTreeMap<String, Linearization>,
    calendar: Option<&Calendar>,
) -> Result<Vec<SyncFinding>, InteropError> {
    let mut position: BTreeMap<&NodeId, usize> = BTreeMap::new();
    for (d, lin) in orders {
        for (i, n) in lin.nodes.iter().enumerate() {
            if !merged.contains(n.as_str()) {
                return Err(InteropError::UnknownNode(n.clone()));
            }
            if n.discipline() != Some(d.as_str()) {
                return Err(InteropError::ForeignNode {
                    discipline: d.clone(),
                    node: n.clone(),
                });
            }
            position.insert(n, i + 1);
        }
    }

    let cross: Vec<CrossEdge> = merged
        .edges()
        .iter()
        .filter(|e| e.tail.discipline() != e.head.discipline())
        .map(|e| CrossEdge::new(e.tail.clone(), e.head.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    // Every order is a chain; every graph edge still binds.
    let mut adj: BTreeMap<&NodeId, BTreeSet<&NodeId>> = BTreeMap::new();
    for lin in orders.values() {
        for w in lin.nodes.windows(2) {
            adj.entry(&w[0]).or_default().insert(&w[1]);
        }
    }
    for e in merged.edges() {
        adj.entry(&e.tail).or_default().insert(&e.head);
    }

    let week = |n: &NodeId, pos: Option<usize>| {
        let cal = calendar?;
        cal.get(&(n.discipline()?.to_owned(), pos?)).copied()
    };
    let mut findings = Vec::new();
    for edge in cross {
        let tail_position = position.get(&edge.tail).copied();
        let cover_before = position.get(&edge.head).copied();
        let tail_week = week(&edge.tail, tail_position);
        let head_week = week(&edge.head, cover_before);
        let status = if tail_position.is_none() || cover_before.is_none() {
            SyncStatus::Unscheduled
        } else if matches!((tail_week, head_week), (Some(t), Some(h)) if h < t) {
            SyncStatus::Violated
        } else if reaches(&adj, &edge.head, &edge.tail) {
            SyncStatus::Unsatisfiable
        } else {
            SyncStatus::Satisfiable
        };
        findings.push(SyncFinding {
            edge,
            status,
            tail_position,
            cover_before,
            tail_week,
            head_week,
        });
    }
    Ok(findings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::CurriculumGraph;
    use crate::interop::merge_graphs;

    fn merged(cross: &[CrossEdge]) -> Dag {
        let a = CurriculumGraph::from_required_edges("latin", &["x", "y"], &[]);
        let b = CurriculumGraph::from_required_edges("greek", &["p", "q"], &[]);
        Dag::new(merge_graphs(&[a, b], cross).unwrap()).unwrap()
    }

    fn orders(text: &str) -> BTreeMap<String, Linearization> {
        parse_orders(text).unwrap()
    }

    #[test]
    fn calendar_weeks() {
        let dag = merged(&[CrossEdge::new("latin:x", "greek:p")]);
        let o = orders("latin\tx,y\ngreek\tq,p\n");
        let ok = parse_calendar("latin\t1\t1\ngreek\t2\t3\n").unwrap();
        let f = sync_report(&dag, &o, Some(&ok)).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].status, SyncStatus::Satisfiable);
        assert_eq!((f[0].tail_position, f[0].cover_before), (Some(1), Some(2)));

        let late = parse_calendar("latin\t1\t3\ngreek\t2\t1\n").unwrap();
        assert_eq!(sync_report(&dag, &o, Some(&late)).unwrap()[0].status, SyncStatus::Violated);
    }

    #[test]
    fn no_cross_edges_no_findings() {
        assert!(sync_report(&merged(&[]), &orders("latin\tx,y\n"), None).unwrap().is_empty());
    }

    #[test]
    fn crossing_constraints_are_unsatisfiable() {
        // latin teaches x then y, greek p then q; y->p and q->x cannot both hold.
        let dag = merged(&[CrossEdge::new("latin:y", "greek:p"), CrossEdge::new("greek:q", "latin:x")]);
        let f = sync_report(&dag, &orders("latin\tx,y\ngreek\tp,q\n"), None).unwrap();
        assert!(f.iter().all(|f| f.status == SyncStatus::Unsatisfiable));
        let f = sync_report(&dag, &orders("latin\tx,y\n"), None).unwrap();
        assert!(f.iter().all(|f| f.status == SyncStatus::Unscheduled));
    }

    #[test]
    fn foreign_and_unknown_nodes() {
        let dag = merged(&[]);
        assert!(matches!(
            sync_report(&dag, &orders("latin\tgreek:p\n"), None),
            Err(InteropError::ForeignNode { .. })
        ));
        assert!(matches!(
            sync_report(&dag, &orders("latin\tzz\n"), None),
            Err(InteropError::UnknownNode(_))
        ));
        assert!(parse_orders("latin\tx\nlatin\ty\n").is_err());
        assert!(parse_calendar("latin\t0\t1\n").is_err());
    }
}
