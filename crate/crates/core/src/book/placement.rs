use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{BookError, Exercise, ExerciseKind};
use crate::graph::NodeId;
use crate::sequencing::Linearization;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "id", rename_all = "snake_case")]
pub enum BookItem {
    Topic(NodeId),
    Exercise(String),
}

/// An exercise left out because some of its nodes are not in the book.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmittedExercise {
    pub id: String,
    pub missing: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub items: Vec<BookItem>,
    pub omitted: Vec<OmittedExercise>,
}

/// Interleaves exercises with the topics of `order`.
///
/// Node-local exercises follow their node; external ones follow the last of
/// their competency nodes, after that node's local exercises. Exercises
/// sharing an insertion point are ordered by (difficulty, id), with
/// unspecified difficulty last.
pub fn place_exercises(order: &Linearization, exercises: &[Exercise]) -> Result<Placement, BookError> {
    let position: BTreeMap<&NodeId, usize> =
        order.nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let mut seen = BTreeSet::new();
    // anchor position -> (local, external) exercises
    let mut slots: BTreeMap<usize, (Vec<&Exercise>, Vec<&Exercise>)> = BTreeMap::new();
    let mut omitted = Vec::new();

    for ex in exercises {
        ex.check_shape()?;
        if !seen.insert(ex.id.as_str()) {
            return Err(BookError::DuplicateExercise(ex.id.clone()));
        }
        let missing: Vec<NodeId> = ex
            .nodes()
            .into_iter()
            .filter(|n| !position.contains_key(n))
            .cloned()
            .collect();
        if !missing.is_empty() {
            omitted.push(OmittedExercise {
                id: ex.id.clone(),
                missing,
            });
            continue;
        }
        let anchor = ex.nodes().iter().map(|n| position[n]).max().expect("non-empty node set");
        let slot = slots.entry(anchor).or_default();
        match ex.kind {
            ExerciseKind::NodeLocal(_) => slot.0.push(ex),
            ExerciseKind::External(_) => slot.1.push(ex),
        }
    }

    let key = |e: &&Exercise| (e.difficulty.unwrap_or(u8::MAX), e.id.clone());
    let mut items = Vec::with_capacity(order.len() + exercises.len());
    for (i, node) in order.nodes.iter().enumerate() {
        items.push(BookItem::Topic(node.clone()));
        if let Some((mut local, mut external)) = slots.remove(&i) {
            local.sort_by_key(key);
            external.sort_by_key(key);
            items.extend(local.into_iter().chain(external).map(|e| BookItem::Exercise(e.id.clone())));
        }
    }
    omitted.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(Placement { items, omitted })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn render(items: &[BookItem]) -> Vec<String> {
        items
            .iter()
            .map(|i| match i {
                BookItem::Topic(n) => n.to_string(),
                BookItem::Exercise(e) => e.clone(),
            })
            .collect()
    }

    #[test]
    fn external_goes_after_last_competency() {
        let order = Linearization::from_iter(["a", "b", "c"]);
        let p = place_exercises(&order, &[Exercise::external("e1", ["a", "c"], "p1")]).unwrap();
        assert_eq!(render(&p.items), vec!["a", "b", "c", "e1"]);
        assert!(p.omitted.is_empty());
    }

    #[test]
    fn local_precedes_external_at_same_node() {
        let order = Linearization::from_iter(["a", "b", "c"]);
        let exercises = [
            Exercise::external("e3", ["a", "b"], "p3"),
            Exercise::local("e2", "b", "p2"),
        ];
        let p = place_exercises(&order, &exercises).unwrap();
        assert_eq!(render(&p.items), vec!["a", "b", "e2", "e3", "c"]);
    }

    #[test]
    fn out_of_book_competency_omitted() {
        let order = Linearization::from_iter(["a", "b"]);
        let p = place_exercises(&order, &[Exercise::external("e4", ["a", "z"], "p4")]).unwrap();
        assert_eq!(render(&p.items), vec!["a", "b"]);
        assert_eq!(
            p.omitted,
            vec![OmittedExercise {
                id: "e4".into(),
                missing: vec![NodeId::from("z")]
            }]
        );
    }

    #[test]
    fn ties_by_difficulty_then_id() {
        let order = Linearization::from_iter(["a"]);
        let exercises = [
            Exercise::local("z1", "a", "p"),
            Exercise::local("b2", "a", "p").with_difficulty(4),
            Exercise::local("a3", "a", "p").with_difficulty(4),
            Exercise::local("c4", "a", "p").with_difficulty(1),
        ];
        let p = place_exercises(&order, &exercises).unwrap();
        assert_eq!(render(&p.items), vec!["a", "c4", "a3", "b2", "z1"]);
    }

    #[test]
    fn malformed_exercises_rejected() {
        let order = Linearization::from_iter(["a"]);
        let empty = Exercise::external("e", Vec::<NodeId>::new(), "p");
        assert!(matches!(
            place_exercises(&order, &[empty]),
            Err(BookError::InvalidExercise { .. })
        ));
        let dup = [Exercise::local("e", "a", "p"), Exercise::local("e", "a", "p")];
        assert_eq!(
            place_exercises(&order, &dup).unwrap_err(),
            BookError::DuplicateExercise("e".into())
        );
        let hard = Exercise::local("e", "a", "p").with_difficulty(6);
        assert!(place_exercises(&order, &[hard]).is_err());
    }
}
