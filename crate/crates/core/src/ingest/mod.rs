//! File formats: the native line-oriented graph format, yEd GraphML import,
//! content manifests and exercise files.

mod colors;
mod files;
mod graphml;
mod native;

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::book::BookError;
use crate::graph::ValidationReport;

pub use colors::{ColorMap, ColorMatch, Rgb};
pub use files::{load_content_store, load_exercises, parse_content_manifest, parse_exercises, write_exercises};
pub use graphml::{import_graphml, GraphmlOptions, ImportWarning, ImportWarningCode, ImportedGraph};
pub use native::{parse_native, write_native, ParsedGraph};

/// A syntax error at a 1-based line and column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

/// All syntax errors of one document, in line order.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ParseErrors(pub Vec<ParseError>);

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{0}")]
    Parse(#[from] ParseErrors),
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("imported graph is invalid ({} error(s))", .0.errors.len())]
    Invalid(Box<ValidationReport>),
    #[error("invalid color map: {0}")]
    ColorMap(String),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("missing files: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingFiles(Vec<PathBuf>),
    #[error(transparent)]
    Book(#[from] BookError),
}

/// Splits a line into whitespace-separated tokens with 1-based columns.
pub(crate) fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s, &line[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out.into_iter()
        .map(|(byte, tok)| (line[..byte].chars().count() + 1, tok))
        .collect()
}
