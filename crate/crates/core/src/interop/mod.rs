//! Interdisciplinary merging and synchronization, and the adapter from
//! morphological-analyzer tags to graph competencies.

mod merge;
mod sync;
mod tags;

use thiserror::Error;

use crate::book::BookError;
use crate::graph::{ClosureError, NodeId, ValidationReport};
use crate::ingest::ParseErrors;

pub use merge::{merge_graphs, parse_cross_edges, CrossEdge};
pub use sync::{parse_calendar, parse_orders, sync_report, Calendar, SyncFinding, SyncStatus};
pub use tags::{
    competency_lookup, process_analyzer_export, register_exercise_from_tags, AnalyzerBatch, AnalyzerEntry,
    CompetencyReport, TagIndex,
};

#[derive(Debug, Error)]
pub enum InteropError {
    #[error("discipline {0} appears more than once")]
    DuplicateDiscipline(String),
    #[error("input graph {discipline} is invalid ({} error(s))", .report.errors.len())]
    InvalidInput {
        discipline: String,
        report: Box<ValidationReport>,
    },
    #[error("cross edge {0} names a node that does not exist")]
    MissingEndpoint(CrossEdge),
    #[error("cross edge {0} does not cross disciplines")]
    SameDiscipline(CrossEdge),
    #[error("merge creates a cycle: {}", .0.iter().map(NodeId::as_str).collect::<Vec<_>>().join(" -> "))]
    Cycle(Vec<NodeId>),
    #[error("merged graph is invalid ({} error(s))", .0.errors.len())]
    Invalid(Box<ValidationReport>),
    #[error("tag {tag} maps to unknown node {node}")]
    UnknownTagNode { tag: String, node: NodeId },
    #[error("node {0} is not part of the merged graph")]
    UnknownNode(NodeId),
    #[error("order for {discipline} lists {node}, which belongs elsewhere")]
    ForeignNode { discipline: String, node: NodeId },
    #[error("no tag matched: {}", .0.join(", "))]
    NoMatch(Vec<String>),
    #[error("{0}")]
    Parse(#[from] ParseErrors),
    #[error(transparent)]
    Closure(#[from] ClosureError),
    #[error(transparent)]
    Book(#[from] BookError),
}

impl InteropError {
    /// Machine-readable code for service and CLI reports.
    pub fn code(&self) -> &'static str {
        match self {
            InteropError::DuplicateDiscipline(_) => "DUPLICATE_DISCIPLINE",
            InteropError::InvalidInput { .. } | InteropError::Invalid(_) => "INVALID_GRAPH",
            InteropError::MissingEndpoint(_) => "DANGLING_EDGE",
            InteropError::SameDiscipline(_) => "SAME_DISCIPLINE",
            InteropError::Cycle(_) => "CYCLE",
            InteropError::UnknownTagNode { .. } | InteropError::UnknownNode(_) => "UNKNOWN_NODE",
            InteropError::ForeignNode { .. } => "FOREIGN_NODE",
            InteropError::NoMatch(_) => "NO_MATCH",
            InteropError::Parse(_) => "SYNTAX",
            InteropError::Closure(_) => "CLOSURE",
            InteropError::Book(_) => "INVALID_EXERCISE",
        }
    }
}

pub(crate) fn parse_tab_lines(text: &str, fields: usize) -> Result<Vec<(usize, Vec<&str>)>, ParseErrors> {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').map(str::trim).collect();
        if parts.len() != fields || parts.iter().any(|p| p.is_empty()) {
            errors.push(crate::ingest::ParseError {
                line: i + 1,
                column: 1,
                message: format!("expected {fields} tab-separated fields"),
            });
            continue;
        }
        out.push((i + 1, parts));
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(ParseErrors(errors))
    }
}
