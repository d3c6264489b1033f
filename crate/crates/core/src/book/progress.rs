use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::BookError;
use crate::graph::{Dag, NodeId};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MasteryStatus {
    #[default]
    Unseen,
    InProgress,
    Mastered,
    Gap,
}

impl MasteryStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            MasteryStatus::Unseen => "unseen",
            MasteryStatus::InProgress => "in_progress",
            MasteryStatus::Mastered => "mastered",
            MasteryStatus::Gap => "gap",
        }
    }
}

impl fmt::Display for MasteryStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MasteryStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unseen" => Ok(MasteryStatus::Unseen),
            "in_progress" => Ok(MasteryStatus::InProgress),
            "mastered" => Ok(MasteryStatus::Mastered),
            "gap" => Ok(MasteryStatus::Gap),
            other => Err(format!("unknown status {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressEntry {
    pub status: MasteryStatus,
    pub updated_at: u64,
}

#[derive(Debug, Error)]
pub enum ProgressError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Mastery status per node for one student; absent nodes are unseen.
///
/// Text form: `student <id>`, optional `graph <id>`, then
/// `status <node> <status> <updated_at>` lines.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressRecord {
    pub student: String,
    pub graph: Option<String>,
    pub entries: BTreeMap<NodeId, ProgressEntry>,
}

impl ProgressRecord {
    pub fn new(student: impl Into<String>) -> Self {
        ProgressRecord {
            student: student.into(),
            ..Default::default()
        }
    }

    pub fn status(&self, node: &str) -> MasteryStatus {
        self.entries.get(node).map(|e| e.status).unwrap_or_default()
    }

    pub fn with_status(mut self, node: &str, status: MasteryStatus) -> Self {
        self.entries.insert(NodeId::from(node), ProgressEntry { status, updated_at: 0 });
        self
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("student {}\n", self.student);
        if let Some(g) = &self.graph {
            out.push_str(&format!("graph {g}\n"));
        }
        for (n, e) in &self.entries {
            out.push_str(&format!("status {n} {} {}\n", e.status, e.updated_at));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ProgressError> {
        let mut rec = ProgressRecord::default();
        let mut has_student = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |message: String| ProgressError::Syntax { line: i + 1, message };
            match line.split_whitespace().collect::<Vec<_>>().as_slice() {
                ["student", s] => {
                    rec.student = (*s).to_owned();
                    has_student = true;
                }
                ["graph", g] => rec.graph = Some((*g).to_owned()),
                ["status", node, status, at] => {
                    if !NodeId::is_valid(node) {
                        return Err(syntax(format!("malformed node id {node:?}")));
                    }
                    let status = status.parse().map_err(syntax)?;
                    let updated_at = at
                        .parse()
                        .map_err(|_| syntax(format!("bad timestamp {at:?}")))?;
                    rec.entries.insert(NodeId::from(*node), ProgressEntry { status, updated_at });
                }
                _ => return Err(syntax(format!("unrecognized line {line:?}"))),
            }
        }
        if !has_student {
            return Err(ProgressError::Syntax {
                line: 0,
                message: "missing `student` line".into(),
            });
        }
        Ok(rec)
    }

    /// Every recorded node must belong to `dag`.
    pub fn check(&self, dag: &Dag) -> Result<(), BookError> {
        match self.entries.keys().find(|n| !dag.contains(n.as_str())) {
            Some(n) => Err(BookError::UnknownGraphNode(n.clone())),
            None => Ok(()),
        }
    }
}

/// Sets one node's status, stamping `now`.
pub fn update_progress(
    record: &ProgressRecord,
    dag: &Dag,
    node: &str,
    status: MasteryStatus,
    now: u64,
) -> Result<ProgressRecord, BookError> {
    if !dag.contains(node) {
        return Err(BookError::UnknownGraphNode(NodeId::from(node)));
    }
    let mut next = record.clone();
    next.entries.insert(NodeId::from(node), ProgressEntry { status, updated_at: now });
    Ok(next)
}
