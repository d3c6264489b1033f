//! Curriculum graphs: textbooks as DAGs of topic units linked by typed
//! prerequisite edges, and the machinery to turn them into personalized,
//! prerequisite-consistent books.
//!
//! - [`graph`]: data model, validation, predecessor closures
//! - [`sequencing`]: topological orders, enumeration, counting, ranking
//! - [`book`]: exercise placement, plans, rendering, review books, edits
//! - [`ingest`]: native format, yEd GraphML import, content and exercise files
//! - [`interop`]: merging disciplines, sync reports, analyzer tags

pub mod book;
pub mod fsutil;
pub mod graph;
pub mod ingest;
pub mod interop;
pub mod sequencing;

pub type Weights = sequencing::RankingWeights<f64>;
pub type Score = sequencing::ScoreBreakdown<f64>;
pub type Ranked = sequencing::RankedOrdering<f64>;
