use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Linearization, Poset, SequencingError};
use crate::graph::ClosureResult;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Linearizations {
    pub orders: Vec<Linearization>,
    pub truncated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearizationCount {
    pub count: u64,
    pub exact: bool,
}

/// Depth-first walk over all linear extensions, branching on ready nodes in
/// ascending id order, so leaves arrive in lexicographic order. `leaf`
/// returns `false` to stop the walk.
struct Walker<'p, F> {
    poset: &'p Poset,
    indegree: Vec<usize>,
    ready: BTreeSet<usize>,
    prefix: Vec<usize>,
    leaf: F,
}

impl<F: FnMut(&[usize]) -> bool> Walker<'_, F> {
    fn run(&mut self) -> bool {
        if self.prefix.len() == self.poset.ids.len() {
            return (self.leaf)(&self.prefix);
        }
        let choices: Vec<usize> = self.ready.iter().copied().collect();
        for v in choices {
            self.ready.remove(&v);
            self.prefix.push(v);
            for &w in &self.poset.succs[v] {
                self.indegree[w] -= 1;
                if self.indegree[w] == 0 {
                    self.ready.insert(w);
                }
            }
            let go_on = self.run();
            for &w in &self.poset.succs[v] {
                if self.indegree[w] == 0 {
                    self.ready.remove(&w);
                }
                self.indegree[w] += 1;
            }
            self.prefix.pop();
            self.ready.insert(v);
            if !go_on {
                return false;
            }
        }
        true
    }
}

fn walk(closure: &ClosureResult, leaf: impl FnMut(&[usize]) -> bool) -> Result<Poset, SequencingError> {
    let poset = Poset::new(&closure.nodes, &closure.induced_edges)?;
    poset.check_acyclic()?;
    let mut w = Walker {
        indegree: poset.indegree.clone(),
        ready: (0..poset.ids.len()).filter(|&i| poset.indegree[i] == 0).collect(),
        prefix: Vec::with_capacity(poset.ids.len()),
        poset: &poset,
        leaf,
    };
    w.run();
    Ok(poset)
}

/// Linear extensions in lexicographic order, at most `cap` of them.
pub fn all_linearizations(closure: &ClosureResult, cap: usize) -> Result<Linearizations, SequencingError> {
    if cap == 0 {
        return Err(SequencingError::ZeroCap);
    }
    let mut found: Vec<Vec<usize>> = Vec::new();
    let mut truncated = false;
    let poset = walk(closure, |order| {
        if found.len() == cap {
            truncated = true;
            return false;
        }
        found.push(order.to_vec());
        true
    })?;
    let orders = found
        .into_iter()
        .map(|o| Linearization::new(o.into_iter().map(|i| poset.ids[i].clone()).collect()))
        .collect();
    Ok(Linearizations { orders, truncated })
}

/// Number of linear extensions if at most `cap`, otherwise `cap` flagged inexact.
pub fn count_linearizations(closure: &ClosureResult, cap: u64) -> Result<LinearizationCount, SequencingError> {
    if cap == 0 {
        return Err(SequencingError::ZeroCap);
    }
    let mut count = 0u64;
    let mut exact = true;
    walk(closure, |_| {
        if count == cap {
            exact = false;
            return false;
        }
        count += 1;
        true
    })?;
    Ok(LinearizationCount { count, exact })
}
