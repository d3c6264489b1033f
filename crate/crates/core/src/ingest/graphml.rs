//! Read-only import of the GraphML dialect written by yEd.
//!
//! Node titles come from `y:NodeLabel`, edge kinds from the `y:LineStyle`
//! color. Plain GraphML `data` entries whose key is named `duration`,
//! `cluster`, `content_ref` or `pages` fill the matching node fields.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use roxmltree::{Document, Node};
use serde::Serialize;

use super::colors::{ColorMap, Rgb};
use super::IngestError;
use crate::graph::{validate_graph, CurriculumGraph, EdgeKind, NodeId, PrerequisiteEdge, TopicNode};

pub const DEFAULT_DURATION_MINUTES: u32 = 30;

#[derive(Clone, Debug)]
pub struct GraphmlOptions {
    pub colors: ColorMap,
    /// Derive node ids from label slugs instead of element ids.
    pub slugify_labels: bool,
    pub discipline: String,
}

impl Default for GraphmlOptions {
    fn default() -> Self {
        GraphmlOptions {
            colors: ColorMap::default(),
            slugify_labels: false,
            discipline: "imported".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ImportWarningCode {
    AltGroupSynthesized,
    DefaultDuration,
    DroppedEdge,
    LoneAlternativeEdge,
    MissingLabel,
    RenamedId,
    UnknownColor,
}

impl ImportWarningCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ImportWarningCode::AltGroupSynthesized => "ALT_GROUP_SYNTHESIZED",
            ImportWarningCode::DefaultDuration => "DEFAULT_DURATION",
            ImportWarningCode::DroppedEdge => "DROPPED_EDGE",
            ImportWarningCode::LoneAlternativeEdge => "LONE_ALTERNATIVE_EDGE",
            ImportWarningCode::MissingLabel => "MISSING_LABEL",
            ImportWarningCode::RenamedId => "RENAMED_ID",
            ImportWarningCode::UnknownColor => "UNKNOWN_COLOR",
        }
    }
}

impl fmt::Display for ImportWarningCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ImportWarning {
    pub code: ImportWarningCode,
    pub message: String,
    pub ids: Vec<String>,
}

impl ImportWarning {
    fn new(code: ImportWarningCode, message: impl Into<String>, ids: Vec<String>) -> Self {
        ImportWarning {
            code,
            message: message.into(),
            ids,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImportedGraph {
    /// Canonical, validated graph.
    pub graph: CurriculumGraph,
    pub warnings: Vec<ImportWarning>,
}

fn is_named(n: &Node, name: &str) -> bool {
    n.is_element() && n.tag_name().name() == name
}

fn text_of(n: Node) -> String {
    let raw: String = n.descendants().filter(|d| d.is_text()).filter_map(|d| d.text()).collect();
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn sanitize_id(raw: &str) -> String {
    raw.chars()
        .map(|c| c.to_ascii_lowercase())
        .map(|c| if c.is_ascii_alphanumeric() || "_:-".contains(c) { c } else { '_' })
        .collect()
}

fn slug_id(label: &str) -> String {
    slug::slugify(label).replace('-', "_")
}

struct RawEdge {
    element: String,
    source: String,
    target: String,
    color: Option<String>,
}

/// Imports a yEd GraphML document. Ambiguities never fail the import;
/// they become warnings. Fails on malformed XML, duplicate ids, or a
/// graph that still does not validate (a cycle).
pub fn import_graphml(xml: &str, opts: &GraphmlOptions) -> Result<ImportedGraph, IngestError> {
    let doc = Document::parse(xml).map_err(|e| IngestError::Xml(e.to_string()))?;
    let root = doc.root_element();
    if !is_named(&root, "graphml") {
        return Err(IngestError::Xml(format!("root element is <{}>, not <graphml>", root.tag_name().name())));
    }
    let graph_el = root
        .descendants()
        .find(|n| is_named(n, "graph"))
        .ok_or_else(|| IngestError::Xml("no <graph> element".into()))?;

    let key_names: BTreeMap<&str, &str> = root
        .children()
        .filter(|n| is_named(n, "key"))
        .filter_map(|k| Some((k.attribute("id")?, k.attribute("attr.name")?)))
        .collect();
    let data_field = |el: Node, field: &str| -> Option<String> {
        el.children()
            .filter(|d| is_named(d, "data"))
            .find(|d| d.attribute("key").and_then(|k| key_names.get(k)) == Some(&field))
            .map(text_of)
            .filter(|s| !s.is_empty())
    };

    let mut warnings = Vec::new();
    let mut g = CurriculumGraph::new(opts.discipline.clone());
    let mut id_of: BTreeMap<String, NodeId> = BTreeMap::new();
    let mut taken: BTreeSet<String> = BTreeSet::new();
    let mut defaulted = Vec::new();

    for el in graph_el.descendants().filter(|n| is_named(n, "node")) {
        let element = el
            .attribute("id")
            .ok_or_else(|| IngestError::Xml("<node> without id".into()))?
            .to_owned();
        // Group nodes in yEd contain a nested graph; only leaves are topics.
        if el.children().any(|c| is_named(&c, "graph")) {
            continue;
        }
        let label = el
            .descendants()
            .find(|d| is_named(d, "NodeLabel") && !text_of(*d).is_empty())
            .map(text_of)
            .or_else(|| data_field(el, "label"));
        let id = match (&label, opts.slugify_labels) {
            (Some(l), true) if !slug_id(l).is_empty() => slug_id(l),
            _ => sanitize_id(&element),
        };
        if id != element && !opts.slugify_labels {
            warnings.push(ImportWarning::new(
                ImportWarningCode::RenamedId,
                format!("element id {element:?} rewritten as {id}"),
                vec![id.clone()],
            ));
        }
        if id_of.contains_key(&element) {
            return Err(IngestError::DuplicateId(element));
        }
        if !taken.insert(id.clone()) {
            return Err(IngestError::DuplicateId(id));
        }
        let title = match label {
            Some(l) => l.replace('|', "/"),
            None => {
                warnings.push(ImportWarning::new(
                    ImportWarningCode::MissingLabel,
                    format!("node {id} has no label; its id is used as title"),
                    vec![id.clone()],
                ));
                id.clone()
            }
        };
        let duration = match data_field(el, "duration").and_then(|d| d.parse::<u32>().ok()) {
            Some(d) if d > 0 => d,
            _ => {
                defaulted.push(id.clone());
                DEFAULT_DURATION_MINUTES
            }
        };
        let mut node = TopicNode::new(id.as_str(), title, duration);
        node.cluster = data_field(el, "cluster").map(|c| sanitize_id(&c));
        node.content_ref = data_field(el, "content_ref").map(|c| sanitize_id(&c));
        node.page_estimate = data_field(el, "pages")
            .and_then(|p| p.replace(',', ".").parse::<f64>().ok())
            .filter(|p| p.is_finite() && *p > 0.0);
        id_of.insert(element, NodeId::from(id));
        g.nodes.push(node);
    }
    if !defaulted.is_empty() {
        warnings.push(ImportWarning::new(
            ImportWarningCode::DefaultDuration,
            format!("{} node(s) without a duration set to {DEFAULT_DURATION_MINUTES} minutes", defaulted.len()),
            defaulted,
        ));
    }

    let mut raw_edges = Vec::new();
    for el in graph_el.descendants().filter(|n| is_named(n, "edge")) {
        let attr = |name: &str| {
            el.attribute(name)
                .map(str::to_owned)
                .ok_or_else(|| IngestError::Xml(format!("<edge> without {name}")))
        };
        raw_edges.push(RawEdge {
            element: el.attribute("id").unwrap_or("").to_owned(),
            source: attr("source")?,
            target: attr("target")?,
            color: el
                .descendants()
                .find(|d| is_named(d, "LineStyle"))
                .and_then(|d| d.attribute("color"))
                .map(str::to_owned)
                .or_else(|| data_field(el, "color")),
        });
    }

    let mut edges: BTreeSet<PrerequisiteEdge> = BTreeSet::new();
    for raw in raw_edges {
        let label = if raw.element.is_empty() {
            format!("{}->{}", raw.source, raw.target)
        } else {
            raw.element.clone()
        };
        let (Some(tail), Some(head)) = (id_of.get(&raw.source), id_of.get(&raw.target)) else {
            warnings.push(ImportWarning::new(
                ImportWarningCode::DroppedEdge,
                format!("edge {label} references a missing node"),
                vec![raw.source, raw.target],
            ));
            continue;
        };
        if tail == head {
            warnings.push(ImportWarning::new(
                ImportWarningCode::DroppedEdge,
                format!("edge {label} is a self-loop"),
                vec![tail.to_string(), head.to_string()],
            ));
            continue;
        }
        let kind = match raw.color.as_deref().map(str::parse::<Rgb>) {
            Some(Ok(c)) => opts.colors.kind_of(c),
            _ => None,
        };
        let kind = kind.unwrap_or_else(|| {
            warnings.push(ImportWarning::new(
                ImportWarningCode::UnknownColor,
                format!(
                    "edge {label} has unmapped color {}; imported as required",
                    raw.color.as_deref().unwrap_or("(none)")
                ),
                vec![tail.to_string(), head.to_string()],
            ));
            EdgeKind::Required
        });
        let edge = PrerequisiteEdge::new(tail.clone(), head.clone(), kind);
        if !edges.insert(edge) {
            warnings.push(ImportWarning::new(
                ImportWarningCode::DroppedEdge,
                format!("edge {label} duplicates {tail}->{head} ({kind})"),
                vec![tail.to_string(), head.to_string()],
            ));
        }
    }

    // One group per head with red in-edges, together with its black ones.
    let mut by_head: BTreeMap<NodeId, Vec<PrerequisiteEdge>> = BTreeMap::new();
    for e in edges {
        by_head.entry(e.head.clone()).or_default().push(e);
    }
    for (head, mut incoming) in by_head {
        let has_red = incoming.iter().any(|e| e.kind == EdgeKind::Alternative);
        let members: Vec<usize> = (0..incoming.len())
            .filter(|&i| incoming[i].kind != EdgeKind::Optional)
            .collect();
        if has_red && members.len() >= 2 {
            let group = format!("alt_{head}");
            let mut ids = vec![group.clone()];
            for &i in &members {
                incoming[i].alt_group = Some(group.clone());
                ids.push(incoming[i].to_string());
            }
            warnings.push(ImportWarning::new(
                ImportWarningCode::AltGroupSynthesized,
                format!("group {group} synthesized from {} edges into {head}; review it", members.len()),
                ids,
            ));
        } else if has_red {
            let e = &mut incoming[members[0]];
            e.kind = EdgeKind::Required;
            warnings.push(ImportWarning::new(
                ImportWarningCode::LoneAlternativeEdge,
                format!("edge {e} is the only non-optional edge into {head}; imported as required"),
                vec![e.tail.to_string(), e.head.to_string()],
            ));
        }
        g.edges.extend(incoming);
    }

    g.canonicalize();
    let report = validate_graph(&g);
    if !report.is_ok() {
        return Err(IngestError::Invalid(Box::new(report)));
    }
    Ok(ImportedGraph { graph: g, warnings })
}
