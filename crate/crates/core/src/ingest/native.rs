//! Native graph format.
//!
//! ```text
//! # comment
//! graph latin
//! meta source De Lingua Latina
//! node ablativo | Ablativo | casi | 45 | c_ablativo
//! edge nominativo -> ablativo required
//! edge genitivo -> ablativo alt:g1
//! edge dativo -> ablativo required alt:g1
//! group g1 ablativo
//! ```
//!
//! A node line may carry a sixth `| <pages>` field. An edge without a kind
//! is required; `alternative` alone marks an ungrouped red edge.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{tokens, ParseError, ParseErrors};
use crate::graph::{
    validate_graph, AltGroup, CurriculumGraph, EdgeKind, Finding, FindingCode, NodeId,
    PrerequisiteEdge, TopicNode, ValidationReport,
};

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedGraph {
    pub graph: CurriculumGraph,
    /// Validation of the parsed graph, findings annotated with source lines.
    pub report: ValidationReport,
}

#[derive(Default)]
struct Lines {
    nodes: Vec<usize>,
    edges: Vec<usize>,
    groups: BTreeMap<String, usize>,
}

fn parse_edge(rest: &[(usize, &str)], line: usize) -> Result<PrerequisiteEdge, ParseError> {
    let err = |column: usize, message: &str| ParseError {
        line,
        column,
        message: message.to_owned(),
    };
    let end_col = rest.last().map(|(c, t)| c + t.chars().count()).unwrap_or(1);
    let (tail, arrow, head) = match rest {
        [t, a, h, ..] => (t, a, h),
        _ => return Err(err(end_col, "expected `edge <tail> -> <head> [kind]`")),
    };
    if arrow.1 != "->" {
        return Err(err(arrow.0, "expected `->`"));
    }
    let mut kind = None;
    let mut group = None;
    for &(col, tok) in &rest[3..] {
        match tok {
            "required" | "optional" | "alternative" if kind.is_none() && group.is_none() => {
                kind = Some(match tok {
                    "required" => EdgeKind::Required,
                    "optional" => EdgeKind::Optional,
                    _ => EdgeKind::Alternative,
                });
            }
            _ if tok.starts_with("alt:") && group.is_none() => {
                let g = &tok[4..];
                if g.is_empty() {
                    return Err(err(col, "empty group name"));
                }
                group = Some(g.to_owned());
            }
            _ => return Err(err(col, &format!("unexpected `{tok}`"))),
        }
    }
    let kind = match (kind, &group) {
        (Some(k), _) => k,
        (None, Some(_)) => EdgeKind::Alternative,
        (None, None) => EdgeKind::Required,
    };
    Ok(PrerequisiteEdge {
        tail: NodeId::from(tail.1),
        head: NodeId::from(head.1),
        kind,
        alt_group: group,
    })
}

fn parse_node(raw: &str, line: usize) -> Result<TopicNode, ParseError> {
    let body = raw.trim_start().strip_prefix("node").unwrap_or("");
    let offset = raw.len() - raw.trim_start().len() + 4;
    let mut fields = Vec::new();
    let mut at = offset;
    for f in body.split('|') {
        let lead = f.len() - f.trim_start().len();
        fields.push((raw[..at + lead].chars().count() + 1, f.trim()));
        at += f.len() + 1;
    }
    let err = |column: usize, message: String| ParseError { line, column, message };
    if !(5..=6).contains(&fields.len()) {
        return Err(err(
            offset + 1,
            "expected `node <id> | <title> | <cluster|-> | <duration> | <content_ref|->`".into(),
        ));
    }
    let dash = |s: &str| (s != "-").then(|| s.to_owned());
    let (id_col, id) = fields[0];
    if id.is_empty() || id.contains(char::is_whitespace) {
        return Err(err(id_col, format!("malformed node id `{id}`")));
    }
    let (dur_col, dur) = fields[3];
    let duration_minutes = dur
        .parse()
        .map_err(|_| err(dur_col, format!("duration `{dur}` is not a whole number of minutes")))?;
    let page_estimate = match fields.get(5) {
        Some(&(col, p)) => Some(
            p.parse::<f64>()
                .map_err(|_| err(col, format!("page estimate `{p}` is not a number")))?,
        ),
        None => None,
    };
    Ok(TopicNode {
        id: NodeId::from(id),
        title: fields[1].1.to_owned(),
        cluster: dash(fields[2].1),
        duration_minutes,
        page_estimate,
        content_ref: dash(fields[4].1),
    })
}

/// Parses a native graph document and validates the result.
///
/// Syntax problems are returned together; structural problems (cycles,
/// duplicate nodes or edges, dangling references) come back in the report
/// with the line of the offending declaration.
pub fn parse_native(text: &str) -> Result<ParsedGraph, ParseErrors> {
    let mut g = CurriculumGraph::default();
    let mut lines = Lines::default();
    let mut errors = Vec::new();
    let mut header_line = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let toks = tokens(raw);
        let Some(&(col, keyword)) = toks.first() else {
            continue;
        };
        if keyword.starts_with('#') {
            continue;
        }
        let err = |column: usize, message: String| ParseError { line, column, message };
        match keyword {
            "graph" => match (&toks[1..], header_line) {
                (_, Some(first)) => errors.push(err(col, format!("second `graph` line (first on line {first})"))),
                ([(_, d)], None) => {
                    g.discipline = (*d).to_owned();
                    header_line = Some(line);
                }
                _ => errors.push(err(col, "expected `graph <discipline>`".into())),
            },
            "meta" => {
                if toks.len() < 3 {
                    errors.push(err(col, "expected `meta <key> <value>`".into()));
                    continue;
                }
                let key = toks[1].1;
                let value_col = toks[2].0;
                let value: String = raw.chars().skip(value_col - 1).collect::<String>().trim().to_owned();
                if g.metadata.insert(key.to_owned(), value).is_some() {
                    errors.push(err(toks[1].0, format!("meta key `{key}` declared twice")));
                }
            }
            "node" => match parse_node(raw, line) {
                Ok(n) => {
                    g.nodes.push(n);
                    lines.nodes.push(line);
                }
                Err(e) => errors.push(e),
            },
            "edge" => match parse_edge(&toks[1..], line) {
                Ok(e) => {
                    g.edges.push(e);
                    lines.edges.push(line);
                }
                Err(e) => errors.push(e),
            },
            "group" => match &toks[1..] {
                [(gc, id), (_, head)] => {
                    if lines.groups.contains_key(*id) {
                        errors.push(err(*gc, format!("group `{id}` declared twice")));
                        continue;
                    }
                    lines.groups.insert((*id).to_owned(), line);
                    g.alt_groups.insert(
                        (*id).to_owned(),
                        AltGroup {
                            id: (*id).to_owned(),
                            head: NodeId::from(*head),
                        },
                    );
                }
                _ => errors.push(err(col, "expected `group <id> <head>`".into())),
            },
            other => errors.push(err(col, format!("unknown declaration `{other}`"))),
        }
    }
    if header_line.is_none() {
        errors.push(ParseError {
            line: 1,
            column: 1,
            message: "missing `graph <discipline>` line".into(),
        });
        errors.sort_by_key(|e| (e.line, e.column));
    }
    if !errors.is_empty() {
        return Err(ParseErrors(errors));
    }

    g.infer_groups();
    let mut report = validate_graph(&g);
    for f in report.errors.iter_mut().chain(report.warnings.iter_mut()) {
        f.line = locate(f, &g, &lines);
    }
    Ok(ParsedGraph { graph: g, report })
}

fn locate(f: &Finding, g: &CurriculumGraph, lines: &Lines) -> Option<usize> {
    let node_line = |id: &str| {
        g.nodes
            .iter()
            .zip(&lines.nodes)
            .filter(|(n, _)| n.id.as_str() == id)
            .map(|(_, l)| *l)
            .next_back()
    };
    let edge_line = |tail: &str, head: &str| {
        g.edges
            .iter()
            .zip(&lines.edges)
            .filter(|(e, _)| e.tail.as_str() == tail && e.head.as_str() == head)
            .map(|(_, l)| *l)
            .next_back()
    };
    let group_line = |gid: &str| {
        lines.groups.get(gid).copied().or_else(|| {
            g.edges
                .iter()
                .zip(&lines.edges)
                .find(|(e, _)| e.alt_group.as_deref() == Some(gid))
                .map(|(_, l)| *l)
        })
    };
    let first = f.ids.first()?;
    match f.code {
        FindingCode::InvalidNodeId | FindingCode::DuplicateNodeId | FindingCode::IsolatedNode => node_line(first),
        FindingCode::SelfLoop
        | FindingCode::DanglingEdge
        | FindingCode::DuplicateEdge
        | FindingCode::InvalidGroupMember
        | FindingCode::UngroupedAlternativeEdge
        | FindingCode::Cycle => match f.ids.get(1) {
            Some(second) => edge_line(first, second).or_else(|| group_line(first)),
            None => group_line(first),
        },
        FindingCode::SingletonAltGroup | FindingCode::GroupHeadMismatch => group_line(first),
        FindingCode::InvalidField => node_line(first).or_else(|| group_line(first)),
    }
}

/// Canonical text: header, metadata by key, nodes by id, edges by
/// (tail, head, kind), groups by id. Byte-stable for equal graphs.
pub fn write_native(g: &CurriculumGraph) -> String {
    let g = g.clone().canonical();
    let mut out = String::new();
    let _ = writeln!(out, "graph {}", g.discipline);
    for (k, v) in &g.metadata {
        let _ = writeln!(out, "meta {k} {v}");
    }
    if !g.nodes.is_empty() {
        out.push('\n');
    }
    for n in &g.nodes {
        let dash = |v: &Option<String>| v.clone().unwrap_or_else(|| "-".into());
        let _ = write!(
            out,
            "node {} | {} | {} | {} | {}",
            n.id,
            n.title,
            dash(&n.cluster),
            n.duration_minutes,
            dash(&n.content_ref)
        );
        if let Some(p) = n.page_estimate {
            let _ = write!(out, " | {p}");
        }
        out.push('\n');
    }
    if !g.edges.is_empty() {
        out.push('\n');
    }
    for e in &g.edges {
        let _ = write!(out, "edge {} -> {}", e.tail, e.head);
        match (&e.alt_group, e.kind) {
            (Some(gr), EdgeKind::Alternative) => {
                let _ = write!(out, " alt:{gr}");
            }
            (Some(gr), k) => {
                let _ = write!(out, " {k} alt:{gr}");
            }
            (None, k) => {
                let _ = write!(out, " {k}");
            }
        }
        out.push('\n');
    }
    let declared: BTreeSet<&String> = g.alt_groups.keys().collect();
    if !declared.is_empty() {
        out.push('\n');
    }
    for grp in g.alt_groups.values() {
        let _ = writeln!(out, "group {} {}", grp.id, grp.head);
    }
    out
}
