use std::collections::BTreeMap;

use super::{CurriculumGraph, GraphError, NodeId};

/// Returns a witness cycle `[n0, .., nk, n0]`, or `None` for an acyclic graph.
///
/// The witness runs through the smallest node id that lies on any cycle and
/// is the first one met by a depth-first search from that node visiting
/// successors in ascending id order.
pub fn detect_cycle(g: &CurriculumGraph) -> Result<Option<Vec<NodeId>>, GraphError> {
    let mut ids: Vec<&NodeId> = g.nodes.iter().map(|n| &n.id).collect();
    ids.sort();
    ids.dedup();
    let index: BTreeMap<&NodeId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut adj = vec![Vec::new(); ids.len()];
    for e in &g.edges {
        let tail = *index
            .get(&e.tail)
            .ok_or_else(|| GraphError::UnknownNode(e.tail.clone()))?;
        let head = *index
            .get(&e.head)
            .ok_or_else(|| GraphError::UnknownNode(e.head.clone()))?;
        adj[tail].push(head);
    }
    Ok(find_cycle(&mut adj).map(|c| c.into_iter().map(|i| ids[i].clone()).collect()))
}

/// Cycle search over an index graph whose indices follow ascending id order.
pub(crate) fn find_cycle(adj: &mut [Vec<usize>]) -> Option<Vec<usize>> {
    for succ in adj.iter_mut() {
        succ.sort_unstable();
        succ.dedup();
    }
    let n = adj.len();
    let reach_from = |start: usize, adj: &[Vec<usize>]| -> Vec<bool> {
        let mut seen = vec![false; n];
        let mut stack: Vec<usize> = adj[start].clone();
        while let Some(v) = stack.pop() {
            if !seen[v] {
                seen[v] = true;
                stack.extend(adj[v].iter().copied().filter(|&w| !seen[w]));
            }
        }
        seen
    };

    let (start, reach) = (0..n).find_map(|v| {
        let r = reach_from(v, adj);
        r[v].then_some((v, r))
    })?;

    // Restrict the search to the strongly connected component of `start`.
    let mut rev = vec![Vec::new(); n];
    for (v, succ) in adj.iter().enumerate() {
        for &w in succ {
            rev[w].push(v);
        }
    }
    let co_reach = reach_from(start, &rev);
    let in_component = |v: usize| v == start || (reach[v] && co_reach[v]);

    let mut visited = vec![false; n];
    visited[start] = true;
    let mut path = vec![start];
    let mut cursor = vec![0usize];
    while let Some(&v) = path.last() {
        let pos = cursor.last_mut().expect("cursor tracks path");
        if *pos == adj[v].len() {
            path.pop();
            cursor.pop();
            continue;
        }
        let w = adj[v][*pos];
        *pos += 1;
        if w == start {
            path.push(start);
            return Some(path);
        }
        if in_component(w) && !visited[w] {
            visited[w] = true;
            path.push(w);
            cursor.push(0);
        }
    }
    unreachable!("a node on a cycle always reaches itself within its component")
}
