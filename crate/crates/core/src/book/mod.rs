//! Personalized book assembly: exercise placement, plan manifests,
//! rendering, student progress, review books and in-itinere edits.

mod content;
mod edit;
mod exercise;
mod placement;
mod plan;
mod progress;
mod render;
mod review;

use thiserror::Error;

use crate::graph::{ClosureError, NodeId};
use crate::sequencing::{OrderCheck, SequencingError};

pub use content::{ContentDoc, ContentStore};
pub use edit::{edit_plan_in_itinere, EditOp, EditRejection};
pub use exercise::{Exercise, ExerciseKind};
pub use placement::{place_exercises, BookItem, OmittedExercise, Placement};
pub use plan::{assemble_book, assemble_review_book, AuthorRole, BookPlan, GraphRef, PlanMeta};
pub use progress::{update_progress, MasteryStatus, ProgressEntry, ProgressError, ProgressRecord};
pub use render::render_book;
pub use review::{review_book, ReviewSelection};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BookError {
    #[error("exercise {exercise} references unknown node {node}")]
    UnknownNode { exercise: String, node: NodeId },
    #[error("invalid exercise {id}: {reason}")]
    InvalidExercise { id: String, reason: String },
    #[error("exercise id {0} used more than once")]
    DuplicateExercise(String),
    #[error("unresolved content tokens: {}", .0.join(", "))]
    MissingContent(Vec<String>),
    #[error("order does not serialize the closure: {0:?}")]
    OrderMismatch(OrderCheck),
    #[error("unknown node {0}")]
    UnknownGraphNode(NodeId),
    #[error("gap target {0} is already mastered")]
    TargetMastered(NodeId),
    #[error("gap target {node} has status {status}, not gap")]
    TargetNotGap { node: NodeId, status: MasteryStatus },
    #[error(transparent)]
    Closure(#[from] ClosureError),
    #[error(transparent)]
    Sequencing(#[from] SequencingError),
}
