use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{parse_tab_lines, InteropError};
use crate::book::{ContentDoc, Exercise};
use crate::graph::{predecessor_closure, ClosurePolicy, ClosureResult, Dag, NodeId};
use crate::ingest::{ParseError, ParseErrors};

fn normalize(tag: &str) -> String {
    tag.trim().to_lowercase()
}

fn normalized_unique<S: AsRef<str>>(tags: &[S]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    tags.iter()
        .map(|t| normalize(t.as_ref()))
        .filter(|t| !t.is_empty() && seen.insert(t.clone()))
        .collect()
}

/// Analyzer tag to the graph nodes that teach it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagIndex {
    entries: BTreeMap<String, BTreeSet<NodeId>>,
}

impl TagIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert<N: Into<NodeId>>(&mut self, tag: &str, nodes: impl IntoIterator<Item = N>) {
        self.entries
            .entry(normalize(tag))
            .or_default()
            .extend(nodes.into_iter().map(Into::into));
    }

    pub fn get(&self, tag: &str) -> Option<&BTreeSet<NodeId>> {
        self.entries.get(&normalize(tag))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Index file: `tag<TAB>node_id[,node_id…]`, tags lowercase tokens.
    pub fn parse(text: &str) -> Result<Self, ParseErrors> {
        let mut index = TagIndex::new();
        let mut errors = Vec::new();
        for (line, f) in parse_tab_lines(text, 2)? {
            let err = |message: String| ParseError { line, column: 1, message };
            let tag = f[0];
            if !NodeId::is_valid(tag) {
                errors.push(err(format!("tag `{tag}` is not a lowercase token")));
                continue;
            }
            if index.entries.contains_key(tag) {
                errors.push(err(format!("tag `{tag}` listed twice")));
                continue;
            }
            let nodes: Vec<&str> = f[1].split(',').map(str::trim).filter(|n| !n.is_empty()).collect();
            if nodes.is_empty() {
                errors.push(err(format!("tag `{tag}` maps to no node")));
                continue;
            }
            index.insert(tag, nodes);
        }
        if errors.is_empty() {
            Ok(index)
        } else {
            Err(ParseErrors(errors))
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (tag, nodes) in &self.entries {
            let nodes: Vec<&str> = nodes.iter().map(NodeId::as_str).collect();
            let _ = writeln!(out, "{tag}\t{}", nodes.join(","));
        }
        out
    }

    pub fn validate(&self, dag: &Dag) -> Result<(), InteropError> {
        for (tag, nodes) in &self.entries {
            if let Some(n) = nodes.iter().find(|n| !dag.contains(n.as_str())) {
                return Err(InteropError::UnknownTagNode {
                    tag: tag.clone(),
                    node: n.clone(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompetencyReport {
    /// Normalized, deduplicated input tags in input order.
    pub tags: Vec<String>,
    pub direct_nodes: BTreeSet<NodeId>,
    pub unknown_tags: Vec<String>,
    pub closure: ClosureResult,
}

/// Maps tags to nodes and takes the predecessor closure of the hits under
/// the default policy. Unknown tags are reported, not fatal, unless
/// nothing matched.
pub fn competency_lookup<S: AsRef<str>>(index: &TagIndex, tags: &[S], dag: &Dag) -> Result<CompetencyReport, InteropError> {
    index.validate(dag)?;
    let tags = normalized_unique(tags);
    let mut direct_nodes = BTreeSet::new();
    let mut unknown_tags = Vec::new();
    for t in &tags {
        match index.entries.get(t) {
            Some(nodes) => direct_nodes.extend(nodes.iter().cloned()),
            None => unknown_tags.push(t.clone()),
        }
    }
    if direct_nodes.is_empty() {
        return Err(InteropError::NoMatch(unknown_tags));
    }
    let closure = predecessor_closure(dag, &direct_nodes, &ClosurePolicy::default())?;
    Ok(CompetencyReport {
        tags,
        direct_nodes,
        unknown_tags,
        closure,
    })
}

fn exercise_id(tags: &[String], prompt_ref: &str) -> String {
    let mut sorted: Vec<&String> = tags.iter().collect();
    sorted.sort();
    let mut h = Sha256::new();
    for t in sorted {
        h.update(t.as_bytes());
        h.update(b",");
    }
    h.update(b"\n");
    h.update(prompt_ref.as_bytes());
    let digest = h.finalize();
    let mut id = String::from("tx-");
    for b in &digest[..8] {
        let _ = write!(id, "{b:02x}");
    }
    id
}

/// External exercise on the nodes the tags hit directly. Its id depends
/// only on the tag set and the prompt.
pub fn register_exercise_from_tags<S: AsRef<str>>(
    index: &TagIndex,
    tags: &[S],
    prompt_ref: &str,
    dag: &Dag,
) -> Result<Exercise, InteropError> {
    let report = competency_lookup(index, tags, dag)?;
    let known: Vec<String> = report
        .tags
        .into_iter()
        .filter(|t| !report.unknown_tags.contains(t))
        .collect();
    let exercise = Exercise::external(exercise_id(&known, prompt_ref), report.direct_nodes, prompt_ref);
    exercise.check(dag)?;
    Ok(exercise)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnalyzerEntry {
    pub line: usize,
    pub form: String,
    pub tags: Vec<String>,
    pub direct_nodes: BTreeSet<NodeId>,
    pub unknown_tags: Vec<String>,
    pub exercise_id: Option<String>,
    /// Error code when no exercise could be made, e.g. `NO_MATCH`.
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AnalyzerBatch {
    pub entries: Vec<AnalyzerEntry>,
    /// Distinct generated exercises in first-seen order.
    pub exercises: Vec<Exercise>,
    /// Prompt documents for the generated exercises, keyed by token.
    pub prompts: BTreeMap<String, ContentDoc>,
}

fn prompt_token(form: &str) -> String {
    let form: String = form
        .to_lowercase()
        .chars()
        .map(|c| if c.is_whitespace() { '_' } else { c })
        .collect();
    format!("form:{form}")
}

/// Turns an analyzer export (`form<TAB>tag[,tag…]`, one form per line) into
/// external exercises. Forms whose tags match nothing are reported per entry.
pub fn process_analyzer_export(index: &TagIndex, text: &str, dag: &Dag) -> Result<AnalyzerBatch, InteropError> {
    index.validate(dag)?;
    let mut batch = AnalyzerBatch::default();
    for (line, f) in parse_tab_lines(text, 2)? {
        let form = f[0].to_owned();
        let raw_tags: Vec<&str> = f[1].split(',').collect();
        let tags = normalized_unique(&raw_tags);
        let prompt = prompt_token(&form);
        let mut entry = AnalyzerEntry {
            line,
            form: form.clone(),
            tags: tags.clone(),
            direct_nodes: BTreeSet::new(),
            unknown_tags: Vec::new(),
            exercise_id: None,
            error: None,
        };
        match competency_lookup(index, &tags, dag) {
            Ok(report) => {
                entry.direct_nodes = report.direct_nodes;
                entry.unknown_tags = report.unknown_tags;
                let exercise = register_exercise_from_tags(index, &tags, &prompt, dag)?;
                entry.exercise_id = Some(exercise.id.clone());
                if !batch.exercises.iter().any(|e| e.id == exercise.id) {
                    let known: Vec<&str> = tags
                        .iter()
                        .filter(|t| !entry.unknown_tags.contains(t))
                        .map(String::as_str)
                        .collect();
                    batch.prompts.insert(
                        prompt,
                        ContentDoc {
                            title: form.clone(),
                            body: format!("Analyse the form *{form}*.\n\nExpected analysis: {}.", known.join(", ")),
                        },
                    );
                    batch.exercises.push(exercise);
                }
            }
            Err(e @ InteropError::NoMatch(_)) => {
                entry.unknown_tags = tags;
                entry.error = Some(e.code().to_owned());
            }
            Err(e) => return Err(e),
        }
        batch.entries.push(entry);
    }
    Ok(batch)
}
