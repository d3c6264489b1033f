use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{BookError, BookItem, BookPlan, ContentStore, ExerciseKind};
use crate::graph::NodeId;

fn quote(text: &str, out: &mut String) {
    for line in text.lines() {
        if line.is_empty() {
            out.push_str(">\n");
        } else {
            let _ = writeln!(out, "> {line}");
        }
    }
}

fn anchor(index: usize, id: &NodeId) -> String {
    format!("unit-{index}-{}", id.as_str().replace(':', "-"))
}

/// Renders a plan as one Markdown document.
///
/// Output depends only on the plan and the content store, so identical
/// inputs give identical bytes.
pub fn render_book(plan: &BookPlan, content: &ContentStore) -> Result<String, BookError> {
    let unit = |n: &NodeId| {
        plan.units
            .get(n)
            .ok_or_else(|| BookError::UnknownGraphNode(n.clone()))
    };
    let doc = |token: &str| {
        content
            .get(token)
            .ok_or_else(|| BookError::MissingContent(vec![token.to_owned()]))
    };

    let mut out = String::new();
    let _ = writeln!(out, "# {}\n", plan.title);
    let _ = writeln!(out, "- Plan: `{}`", plan.id);
    let _ = writeln!(out, "- Graph: `{}` version {}", plan.graph_ref.id, plan.graph_ref.version);
    let role = match plan.author_role {
        super::AuthorRole::Teacher => "teacher",
        super::AuthorRole::Student => "student",
    };
    let _ = writeln!(out, "- Prepared by: {role}");
    let _ = writeln!(out, "- Created: {} (Unix time)", plan.created_at);
    let _ = writeln!(out, "- Units: {}", plan.order.len());
    let placed = plan.items.len() - plan.order.len();
    let _ = writeln!(out, "- Exercises: {placed}");
    let _ = writeln!(out, "- Estimated time: {} minutes\n", plan.total_minutes());

    out.push_str("## Contents\n\n");
    for (i, n) in plan.order.nodes.iter().enumerate() {
        let _ = writeln!(out, "{}. [{}](#{})", i + 1, unit(n)?.title, anchor(i + 1, n));
    }
    out.push('\n');

    if !plan.stubs.is_empty() {
        out.push_str("## Already mastered\n\n");
        out.push_str("These prerequisites are cited for reference and not taught again.\n\n");
        for s in &plan.stubs {
            let _ = writeln!(out, "- **{}** (`{s}`)", unit(s)?.title);
        }
        out.push('\n');
    }

    let positions: BTreeMap<&NodeId, usize> =
        plan.order.nodes.iter().enumerate().map(|(i, n)| (n, i + 1)).collect();
    for item in &plan.items {
        match item {
            BookItem::Topic(n) => {
                let u = unit(n)?;
                let i = positions[n];
                let _ = writeln!(out, "<a id=\"{}\"></a>\n", anchor(i, n));
                let _ = writeln!(out, "## {i}. {}\n", u.title);
                match &u.content_ref {
                    Some(token) => {
                        let d = doc(token)?;
                        if !d.body.is_empty() {
                            let _ = writeln!(out, "{}\n", d.body);
                        }
                    }
                    None => out.push_str("_No content attached._\n\n"),
                }
            }
            BookItem::Exercise(id) => {
                let ex = plan
                    .exercise(id)
                    .ok_or_else(|| BookError::InvalidExercise {
                        id: id.clone(),
                        reason: "placed but not listed in the plan".into(),
                    })?;
                let tag = match &ex.kind {
                    ExerciseKind::NodeLocal(n) => format!("Unit exercise on `{n}`"),
                    ExerciseKind::External(set) => {
                        let list: Vec<&str> = set.iter().map(NodeId::as_str).collect();
                        format!("External exercise on {}", list.join(", "))
                    }
                };
                let mut header = format!("**Exercise {id}** · {tag}");
                if let Some(d) = ex.difficulty {
                    let _ = write!(header, " · difficulty {d}");
                }
                let mut block = format!("{header}\n\n{}", doc(&ex.prompt_ref)?.body);
                block = block.trim_end().to_owned();
                quote(&block, &mut out);
                out.push('\n');
            }
        }
    }

    if !plan.omitted.is_empty() {
        out.push_str("## Appendix: omitted exercises\n\n");
        for o in &plan.omitted {
            let missing: Vec<&str> = o.missing.iter().map(NodeId::as_str).collect();
            let _ = writeln!(out, "- `{}`: needs units outside this book: {}", o.id, missing.join(", "));
        }
        out.push('\n');
    }
    while out.ends_with("\n\n") {
        out.pop();
    }
    Ok(out)
}
