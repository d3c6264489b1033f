//! Content manifests (`token<TAB>relative/path`) and exercise files:
//!
//! ```text
//! exercise e1 local ablativo
//! prompt p_e1
//! difficulty 2
//! exercise e2 external ablativo,genitivo
//! prompt p_e2
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{tokens, IngestError, ParseError, ParseErrors};
use crate::book::{ContentDoc, ContentStore, Exercise, ExerciseKind};
use crate::graph::{Dag, NodeId};

fn read(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn parse_content_manifest(text: &str) -> Result<Vec<(String, PathBuf)>, ParseErrors> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |column, message: String| ParseError {
            line: i + 1,
            column,
            message,
        };
        match line.split_once('\t') {
            Some((token, path)) if !token.trim().is_empty() && !path.trim().is_empty() => {
                let token = token.trim();
                if !seen.insert(token.to_owned()) {
                    errors.push(err(1, format!("content token `{token}` listed twice")));
                    continue;
                }
                out.push((token.to_owned(), PathBuf::from(path.trim())));
            }
            _ => errors.push(err(1, "expected `token<TAB>path`".into())),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(ParseErrors(errors))
    }
}

/// Loads every document named by the manifest. Paths are relative to the
/// manifest's directory. Reports all missing files at once.
pub fn load_content_store(manifest: &Path) -> Result<ContentStore, IngestError> {
    let entries = parse_content_manifest(&read(manifest)?)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut store = ContentStore::new();
    let mut missing = Vec::new();
    for (token, rel) in entries {
        let path = base.join(&rel);
        match fs::read_to_string(&path) {
            Ok(text) => store.insert(token.clone(), ContentDoc::from_markdown(&token, &text)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => missing.push(path),
            Err(source) => return Err(IngestError::Io { path, source }),
        }
    }
    if !missing.is_empty() {
        return Err(IngestError::MissingFiles(missing));
    }
    Ok(store)
}

pub fn parse_exercises(text: &str) -> Result<Vec<Exercise>, ParseErrors> {
    let mut out: Vec<(usize, Exercise, bool)> = Vec::new();
    let mut errors = Vec::new();
    // Attribute lines following a malformed declaration are skipped.
    let mut broken = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let toks = tokens(raw);
        let Some(&(col, keyword)) = toks.first() else {
            continue;
        };
        if keyword.starts_with('#') {
            continue;
        }
        let err = |column, message: String| ParseError { line, column, message };
        match (keyword, &toks[1..]) {
            ("exercise", [(_, id), (kc, kind), (_, nodes)]) => {
                let nodes: Vec<NodeId> = nodes.split(',').filter(|n| !n.is_empty()).map(NodeId::from).collect();
                let kind = match (*kind, nodes.as_slice()) {
                    ("local", [n]) => ExerciseKind::NodeLocal(n.clone()),
                    ("external", ns) if !ns.is_empty() => ExerciseKind::External(ns.iter().cloned().collect()),
                    ("local", _) => {
                        errors.push(err(*kc, "a local exercise names exactly one node".into()));
                        broken = true;
                        continue;
                    }
                    _ => {
                        errors.push(err(*kc, format!("expected `local` or `external`, found `{kind}`")));
                        broken = true;
                        continue;
                    }
                };
                if out.iter().any(|(_, e, _)| e.id == *id) {
                    errors.push(err(toks[1].0, format!("exercise `{id}` declared twice")));
                }
                out.push((
                    line,
                    Exercise {
                        id: (*id).to_owned(),
                        kind,
                        prompt_ref: String::new(),
                        difficulty: None,
                    },
                    false,
                ));
                broken = false;
            }
            ("exercise", _) => {
                errors.push(err(col, "expected `exercise <id> local|external <nodes>`".into()));
                broken = true;
            }
            ("prompt" | "difficulty", _) if broken => {}
            ("prompt" | "difficulty", rest) => {
                let Some((_, current, has_prompt)) = out.last_mut() else {
                    errors.push(err(col, format!("`{keyword}` before any exercise")));
                    continue;
                };
                match (keyword, rest) {
                    ("prompt", [(_, p)]) => {
                        current.prompt_ref = (*p).to_owned();
                        *has_prompt = true;
                    }
                    ("difficulty", [(dc, d)]) => match d.parse::<u8>() {
                        Ok(v) if (1..=5).contains(&v) => current.difficulty = Some(v),
                        _ => errors.push(err(*dc, format!("difficulty `{d}` is not within 1-5"))),
                    },
                    _ => errors.push(err(col, format!("expected `{keyword} <value>`"))),
                }
            }
            (other, _) => errors.push(err(col, format!("unknown declaration `{other}`"))),
        }
    }
    for (line, e, has_prompt) in &out {
        if !has_prompt {
            errors.push(ParseError {
                line: *line,
                column: 1,
                message: format!("exercise `{}` has no prompt", e.id),
            });
        } else if let Err(problem) = e.check_shape() {
            errors.push(ParseError {
                line: *line,
                column: 1,
                message: problem.to_string(),
            });
        }
    }
    if errors.is_empty() {
        Ok(out.into_iter().map(|(_, e, _)| e).collect())
    } else {
        errors.sort_by_key(|e| (e.line, e.column));
        Err(ParseErrors(errors))
    }
}

pub fn write_exercises(exercises: &[Exercise]) -> String {
    let mut out = String::new();
    for e in exercises {
        let nodes: Vec<&str> = e.nodes().iter().map(|n| n.as_str()).collect();
        let kind = if e.is_external() { "external" } else { "local" };
        let _ = writeln!(out, "exercise {} {kind} {}", e.id, nodes.join(","));
        let _ = writeln!(out, "prompt {}", e.prompt_ref);
        if let Some(d) = e.difficulty {
            let _ = writeln!(out, "difficulty {d}");
        }
    }
    out
}

/// Parses an exercise file and checks every referenced node against `dag`.
pub fn load_exercises(path: &Path, dag: &Dag) -> Result<Vec<Exercise>, IngestError> {
    let exercises = parse_exercises(&read(path)?)?;
    for e in &exercises {
        e.check(dag)?;
    }
    Ok(exercises)
}
