//! Strategies for random curriculum graphs and the brute-force oracles the
//! engine is checked against. Oracles share no code with the algorithms
//! they check.

pub mod oracle;
pub mod strategy;

use std::path::PathBuf;

/// Absolute path of a file under the workspace `fixtures/` directory.
pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

pub fn read_fixture(rel: &str) -> String {
    let path = fixture(rel);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
