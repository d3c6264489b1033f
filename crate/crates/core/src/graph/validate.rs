use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::cycle::find_cycle;
use super::{CurriculumGraph, EdgeKind, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FindingCode {
    Cycle,
    DanglingEdge,
    DuplicateEdge,
    DuplicateNodeId,
    GroupHeadMismatch,
    InvalidField,
    InvalidGroupMember,
    InvalidNodeId,
    SelfLoop,
    SingletonAltGroup,
    IsolatedNode,
    UngroupedAlternativeEdge,
}

impl FindingCode {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingCode::Cycle => "CYCLE",
            FindingCode::DanglingEdge => "DANGLING_EDGE",
            FindingCode::DuplicateEdge => "DUPLICATE_EDGE",
            FindingCode::DuplicateNodeId => "DUPLICATE_NODE_ID",
            FindingCode::GroupHeadMismatch => "GROUP_HEAD_MISMATCH",
            FindingCode::InvalidField => "INVALID_FIELD",
            FindingCode::InvalidGroupMember => "INVALID_GROUP_MEMBER",
            FindingCode::InvalidNodeId => "INVALID_NODE_ID",
            FindingCode::SelfLoop => "SELF_LOOP",
            FindingCode::SingletonAltGroup => "SINGLETON_ALT_GROUP",
            FindingCode::IsolatedNode => "ISOLATED_NODE",
            FindingCode::UngroupedAlternativeEdge => "UNGROUPED_ALTERNATIVE_EDGE",
        }
    }
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub code: FindingCode,
    pub message: String,
    /// Offending ids; for `CYCLE` this is the witness path in order.
    pub ids: Vec<String>,
    /// Source line, when the graph came from a parsed document.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
}

impl Finding {
    pub fn new(code: FindingCode, message: impl Into<String>, ids: Vec<String>) -> Self {
        Finding {
            code,
            message: message.into(),
            ids,
            line: None,
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code)?;
        if let Some(line) = self.line {
            write!(f, " (line {line})")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Finding>,
    pub warnings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has_error(&self, code: FindingCode) -> bool {
        self.errors.iter().any(|f| f.code == code)
    }

    pub fn has_warning(&self, code: FindingCode) -> bool {
        self.warnings.iter().any(|f| f.code == code)
    }

    pub(crate) fn sort(&mut self) {
        let key = |f: &Finding| (f.code.as_str(), f.ids.clone(), f.line);
        self.errors.sort_by_key(key);
        self.warnings.sort_by_key(key);
    }
}

fn is_token(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || c == '|' || c == '#')
}

/// Checks a candidate graph. Never fails: every problem becomes a finding,
/// sorted by code and then ids.
pub fn validate_graph(g: &CurriculumGraph) -> ValidationReport {
    let mut report = ValidationReport::default();
    let err = |r: &mut ValidationReport, code, msg: String, ids: Vec<String>| {
        r.errors.push(Finding::new(code, msg, ids))
    };

    if !is_token(&g.discipline) {
        err(
            &mut report,
            FindingCode::InvalidField,
            format!("discipline {:?} is not a token", g.discipline),
            vec![g.discipline.clone()],
        );
    }
    for (k, v) in &g.metadata {
        if !is_token(k) || v.contains('\n') || v.trim() != v || v.is_empty() {
            err(
                &mut report,
                FindingCode::InvalidField,
                format!("metadata entry {k:?} is malformed"),
                vec![k.clone()],
            );
        }
    }

    let mut seen: BTreeSet<&NodeId> = BTreeSet::new();
    let mut duplicated: BTreeSet<&NodeId> = BTreeSet::new();
    for n in &g.nodes {
        let id = n.id.as_str();
        if !NodeId::is_valid(id) {
            err(
                &mut report,
                FindingCode::InvalidNodeId,
                format!("node id {id:?} must match [a-z0-9_:-]+"),
                vec![id.to_owned()],
            );
        }
        if !seen.insert(&n.id) {
            duplicated.insert(&n.id);
        }
        if n.duration_minutes == 0 {
            err(
                &mut report,
                FindingCode::InvalidField,
                format!("node {id} has zero duration"),
                vec![id.to_owned()],
            );
        }
        if n.title.is_empty() || n.title.trim() != n.title || n.title.contains(['|', '\n', '\r']) {
            err(
                &mut report,
                FindingCode::InvalidField,
                format!("node {id} has a malformed title"),
                vec![id.to_owned()],
            );
        }
        for (field, value) in [("cluster", &n.cluster), ("content_ref", &n.content_ref)] {
            if let Some(v) = value {
                if !is_token(v) || v == "-" {
                    err(
                        &mut report,
                        FindingCode::InvalidField,
                        format!("node {id} has a malformed {field} {v:?}"),
                        vec![id.to_owned()],
                    );
                }
            }
        }
        if let Some(p) = n.page_estimate {
            if !(p.is_finite() && p > 0.0) {
                err(
                    &mut report,
                    FindingCode::InvalidField,
                    format!("node {id} has a non-positive page estimate"),
                    vec![id.to_owned()],
                );
            }
        }
    }
    for id in duplicated {
        err(
            &mut report,
            FindingCode::DuplicateNodeId,
            format!("node id {id} declared more than once"),
            vec![id.to_string()],
        );
    }

    // Index over distinct ids in ascending order; shared with cycle search.
    let ids: Vec<&NodeId> = seen.iter().copied().collect();
    let index: BTreeMap<&NodeId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut adj = vec![Vec::new(); ids.len()];
    let mut touched = vec![false; ids.len()];
    let mut edge_seen = BTreeSet::new();
    let mut members: BTreeMap<&str, Vec<&super::PrerequisiteEdge>> = BTreeMap::new();

    for e in &g.edges {
        let pair = vec![e.tail.to_string(), e.head.to_string()];
        let (t, h) = (index.get(&e.tail), index.get(&e.head));
        if t.is_none() || h.is_none() {
            err(
                &mut report,
                FindingCode::DanglingEdge,
                format!("edge {e} references an undeclared node"),
                pair.clone(),
            );
        }
        if e.tail == e.head {
            err(
                &mut report,
                FindingCode::SelfLoop,
                format!("edge {e} is a self-loop"),
                pair.clone(),
            );
        } else if let (Some(&t), Some(&h)) = (t, h) {
            adj[t].push(h);
            touched[t] = true;
            touched[h] = true;
        }
        if !edge_seen.insert((&e.tail, &e.head, e.kind)) {
            err(
                &mut report,
                FindingCode::DuplicateEdge,
                format!("edge {e} ({}) declared more than once", e.kind),
                pair.clone(),
            );
        }
        match (&e.alt_group, e.kind) {
            (Some(gid), EdgeKind::Optional) => err(
                &mut report,
                FindingCode::InvalidGroupMember,
                format!("optional edge {e} cannot join group {gid}"),
                pair.clone(),
            ),
            (Some(gid), _) => members.entry(gid.as_str()).or_default().push(e),
            (None, EdgeKind::Alternative) => report.warnings.push(Finding::new(
                FindingCode::UngroupedAlternativeEdge,
                format!("alternative edge {e} belongs to no group and is treated as required"),
                pair.clone(),
            )),
            (None, _) => {}
        }
    }

    let mut group_ids: BTreeSet<&str> = members.keys().copied().collect();
    group_ids.extend(g.alt_groups.keys().map(String::as_str));
    for gid in group_ids {
        let declared = g.alt_groups.get(gid);
        let group_members = members.get(gid).map(Vec::as_slice).unwrap_or(&[]);
        if let Some(decl) = declared {
            if decl.id != gid {
                err(
                    &mut report,
                    FindingCode::InvalidField,
                    format!("group declared under key {gid} carries id {}", decl.id),
                    vec![gid.to_owned()],
                );
            }
        }
        if !is_token(gid) {
            err(
                &mut report,
                FindingCode::InvalidField,
                format!("group id {gid:?} is not a token"),
                vec![gid.to_owned()],
            );
        }
        let head = declared
            .map(|d| &d.head)
            .or_else(|| group_members.iter().map(|e| &e.head).min());
        let mismatched: Vec<String> = group_members
            .iter()
            .filter(|e| Some(&e.head) != head)
            .map(|e| e.to_string())
            .collect();
        if !mismatched.is_empty() {
            let mut ids = vec![gid.to_owned()];
            ids.extend(mismatched);
            err(
                &mut report,
                FindingCode::GroupHeadMismatch,
                format!("members of group {gid} do not share one head"),
                ids,
            );
        }
        if let Some(h) = head {
            if !index.contains_key(h) {
                err(
                    &mut report,
                    FindingCode::DanglingEdge,
                    format!("group {gid} points at undeclared head {h}"),
                    vec![gid.to_owned(), h.to_string()],
                );
            }
        }
        let tails: BTreeSet<&NodeId> = group_members.iter().map(|e| &e.tail).collect();
        if tails.len() != group_members.len() {
            err(
                &mut report,
                FindingCode::DuplicateEdge,
                format!("group {gid} lists the same prerequisite twice"),
                vec![gid.to_owned()],
            );
        }
        if group_members.len() < 2 {
            err(
                &mut report,
                FindingCode::SingletonAltGroup,
                format!("group {gid} has {} member(s); at least 2 required", group_members.len()),
                vec![gid.to_owned()],
            );
        }
    }

    if let Some(cycle) = find_cycle(&mut adj) {
        let path: Vec<String> = cycle.iter().map(|&i| ids[i].to_string()).collect();
        err(
            &mut report,
            FindingCode::Cycle,
            format!("prerequisite cycle {}", path.join(" -> ")),
            path,
        );
    }

    if g.nodes.len() > 1 {
        for (i, id) in ids.iter().enumerate() {
            if !touched[i] {
                report.warnings.push(Finding::new(
                    FindingCode::IsolatedNode,
                    format!("node {id} has no prerequisite relations"),
                    vec![id.to_string()],
                ));
            }
        }
    }

    report.sort();
    report
}
