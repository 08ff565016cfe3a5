//! Maximum-cardinality bipartite matching (Hopcroft–Karp).
//!
//! The left side is an explicit list of adjacency slices (one per bundle
//! entry, duplicates allowed), the right side is the global agent range.
//! Scratch space is allocated per call; nothing is shared between calls.

use std::collections::VecDeque;

use crate::ids::AgentId;

const FREE: usize = usize::MAX;
const INF: u32 = u32::MAX;

/// Result of a maximum matching: `left_mate[l]` is the agent matched to left
/// vertex `l`.
#[derive(Debug, Clone)]
pub(crate) struct MaxMatching {
    pub size: usize,
    #[cfg_attr(not(test), allow(dead_code))]
    pub left_mate: Vec<Option<AgentId>>,
}

pub(crate) fn maximum_matching(left: &[&[AgentId]], num_right: usize) -> MaxMatching {
    let n = left.len();
    let mut mate_l = vec![FREE; n];
    let mut mate_r = vec![FREE; num_right];
    let mut size = 0;

    // Greedy start: most instances here are solved outright by it.
    for (l, adj) in left.iter().enumerate() {
        if let Some(a) = adj.iter().find(|a| mate_r[a.0] == FREE) {
            mate_l[l] = a.0;
            mate_r[a.0] = l;
            size += 1;
        }
    }

    let mut dist = vec![INF; n];
    let mut queue = VecDeque::new();
    let mut cursor = vec![0usize; n];
    loop {
        // BFS layering from free left vertices.
        queue.clear();
        for l in 0..n {
            if mate_l[l] == FREE {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = INF;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for a in left[l] {
                let next = mate_r[a.0];
                if next == FREE {
                    found = true;
                } else if dist[next] == INF {
                    dist[next] = dist[l] + 1;
                    queue.push_back(next);
                }
            }
        }
        if !found {
            break;
        }
        cursor.iter_mut().for_each(|c| *c = 0);
        for l in 0..n {
            if mate_l[l] == FREE && augment(l, left, &mut mate_l, &mut mate_r, &mut dist, &mut cursor) {
                size += 1;
            }
        }
    }

    MaxMatching {
        size,
        left_mate: mate_l
            .into_iter()
            .map(|a| (a != FREE).then_some(AgentId(a)))
            .collect(),
    }
}

// Iterative layered DFS; `cursor` remembers the next edge to try per vertex.
fn augment(
    root: usize,
    left: &[&[AgentId]],
    mate_l: &mut [usize],
    mate_r: &mut [usize],
    dist: &mut [u32],
    cursor: &mut [usize],
) -> bool {
    let mut stack = vec![root];
    while let Some(&l) = stack.last() {
        let adj = left[l];
        let mut advanced = false;
        while cursor[l] < adj.len() {
            let a = adj[cursor[l]].0;
            let next = mate_r[a];
            if next == FREE {
                // Flip the path recorded on the stack.
                let mut agent = a;
                while let Some(v) = stack.pop() {
                    let prev = mate_l[v];
                    mate_l[v] = agent;
                    mate_r[agent] = v;
                    agent = prev;
                }
                return true;
            }
            if dist[next] == dist[l] + 1 {
                stack.push(next);
                advanced = true;
                break;
            }
            cursor[l] += 1;
        }
        if !advanced {
            dist[l] = INF;
            stack.pop();
            if let Some(&parent) = stack.last() {
                cursor[parent] += 1;
            }
        }
    }
    false
}
