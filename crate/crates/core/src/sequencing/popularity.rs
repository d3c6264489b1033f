use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::Linearization;
use crate::graph::NodeId;

#[derive(Debug, Error)]
pub enum PopularityError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Counts of adjacent ordered pairs across adopted books.
///
/// Persisted as lines `books <count>` and `pair <tail> <head> <count>`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PopularityStore {
    pair_counts: BTreeMap<(NodeId, NodeId), u64>,
    book_count: u64,
}

impl PopularityStore {
    pub fn pair_count(&self, tail: &NodeId, head: &NodeId) -> u64 {
        // BTreeMap lookup needs an owned key pair
        self.pair_counts
            .get(&(tail.clone(), head.clone()))
            .copied()
            .unwrap_or(0)
    }

    pub fn book_count(&self) -> u64 {
        self.book_count
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&NodeId, &NodeId, u64)> {
        self.pair_counts.iter().map(|((t, h), c)| (t, h, *c))
    }

    /// Counts one adopted book: every adjacent pair and the book total go up by one.
    pub fn record_adoption(&mut self, lin: &Linearization) {
        for w in lin.nodes.windows(2) {
            *self
                .pair_counts
                .entry((w[0].clone(), w[1].clone()))
                .or_default() += 1;
        }
        self.book_count += 1;
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("books {}\n", self.book_count);
        for ((t, h), c) in &self.pair_counts {
            writeln!(out, "pair {t} {h} {c}").expect("writing to a String");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, PopularityError> {
        let mut store = PopularityStore::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |message: &str| PopularityError::Syntax {
                line: i + 1,
                message: message.to_owned(),
            };
            let count = |s: &str| s.parse::<u64>().map_err(|_| syntax("count must be a non-negative integer"));
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["books", n] => store.book_count = count(n)?,
                ["pair", t, h, n] => {
                    if !NodeId::is_valid(t) || !NodeId::is_valid(h) {
                        return Err(syntax("malformed node id"));
                    }
                    let prev = store
                        .pair_counts
                        .insert((NodeId::from(*t), NodeId::from(*h)), count(n)?);
                    if prev.is_some() {
                        return Err(syntax("pair listed twice"));
                    }
                }
                _ => return Err(syntax("expected `books <n>` or `pair <tail> <head> <n>`")),
            }
        }
        Ok(store)
    }

    /// Missing file loads as an empty store.
    pub fn load(path: &Path) -> Result<Self, PopularityError> {
        match std::fs::read_to_string(path) {
            Ok(text) => Self::parse(&text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), PopularityError> {
        crate::fsutil::write_atomic(path, self.to_text().as_bytes())?;
        Ok(())
    }
}
