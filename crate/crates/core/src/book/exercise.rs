use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::BookError;
use crate::graph::{Dag, NodeId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExerciseKind {
    /// Belongs to one unit and follows it directly.
    NodeLocal(NodeId),
    /// Needs a set of competencies; placed once the last of them is taught.
    External(BTreeSet<NodeId>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exercise {
    pub id: String,
    pub kind: ExerciseKind,
    pub prompt_ref: String,
    pub difficulty: Option<u8>,
}

impl Exercise {
    pub fn local(id: impl Into<String>, node: impl Into<NodeId>, prompt_ref: impl Into<String>) -> Self {
        Exercise {
            id: id.into(),
            kind: ExerciseKind::NodeLocal(node.into()),
            prompt_ref: prompt_ref.into(),
            difficulty: None,
        }
    }

    pub fn external<N: Into<NodeId>>(
        id: impl Into<String>,
        nodes: impl IntoIterator<Item = N>,
        prompt_ref: impl Into<String>,
    ) -> Self {
        Exercise {
            id: id.into(),
            kind: ExerciseKind::External(nodes.into_iter().map(Into::into).collect()),
            prompt_ref: prompt_ref.into(),
            difficulty: None,
        }
    }

    pub fn with_difficulty(mut self, d: u8) -> Self {
        self.difficulty = Some(d);
        self
    }

    pub fn is_external(&self) -> bool {
        matches!(self.kind, ExerciseKind::External(_))
    }

    /// Nodes the exercise refers to, ascending.
    pub fn nodes(&self) -> Vec<&NodeId> {
        match &self.kind {
            ExerciseKind::NodeLocal(n) => vec![n],
            ExerciseKind::External(set) => set.iter().collect(),
        }
    }

    /// Shape checks that need no graph.
    pub fn check_shape(&self) -> Result<(), BookError> {
        let invalid = |reason: &str| BookError::InvalidExercise {
            id: self.id.clone(),
            reason: reason.to_owned(),
        };
        if !NodeId::is_valid(&self.id) {
            return Err(invalid("id must match [a-z0-9_:-]+"));
        }
        if self.prompt_ref.is_empty() || self.prompt_ref.contains(char::is_whitespace) {
            return Err(invalid("prompt reference must be a token"));
        }
        if let Some(d) = self.difficulty {
            if !(1..=5).contains(&d) {
                return Err(invalid("difficulty must be within 1..=5"));
            }
        }
        if let ExerciseKind::External(set) = &self.kind {
            if set.is_empty() {
                return Err(invalid("external competency set is empty"));
            }
        }
        Ok(())
    }

    /// Shape checks plus every referenced node existing in `dag`.
    pub fn check(&self, dag: &Dag) -> Result<(), BookError> {
        self.check_shape()?;
        match self.nodes().into_iter().find(|n| !dag.contains(n.as_str())) {
            Some(n) => Err(BookError::UnknownNode {
                exercise: self.id.clone(),
                node: n.clone(),
            }),
            None => Ok(()),
        }
    }
}
