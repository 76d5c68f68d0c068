//! Strongly connected components of the directed index graph.

use crate::layout::{AdjacencyMatrix, SENTINEL};

/// Number of strongly connected components among slots `[0, count)`.
/// Sentinel entries and edges to slots at or beyond `count` are ignored.
pub fn scc_count(adjacency: &AdjacencyMatrix, count: usize) -> usize {
    scc_labels(adjacency, count).1
}

/// Component id of every slot in `[0, count)`, and the component count.
pub fn scc_labels(adjacency: &AdjacencyMatrix, count: usize) -> (Vec<u32>, usize) {
    scc_labels_with(count, |u| {
        adjacency
            .row(u)
            .iter()
            .copied()
            .filter(move |&v| v != SENTINEL && (v as usize) < count)
            .map(|v| v as usize)
    })
}

pub fn scc_count_with<I>(count: usize, successors: impl Fn(usize) -> I) -> usize
where
    I: Iterator<Item = usize>,
{
    scc_labels_with(count, successors).1
}

/// Iterative Tarjan over an arbitrary successor function. Components are
/// numbered in the order they are completed.
pub fn scc_labels_with<I>(count: usize, successors: impl Fn(usize) -> I) -> (Vec<u32>, usize)
where
    I: Iterator<Item = usize>,
{
    const UNVISITED: u32 = u32::MAX;
    let mut index = vec![UNVISITED; count];
    let mut low = vec![0u32; count];
    let mut on_stack = vec![false; count];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0u32;
    let mut components = 0;
    let mut labels = vec![0u32; count];

    // Explicit DFS frames: node plus its successor list and cursor.
    let mut frames: Vec<(usize, Vec<usize>, usize)> = Vec::new();
    for root in 0..count {
        if index[root] != UNVISITED {
            continue;
        }
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        frames.push((root, successors(root).collect(), 0));

        while let Some(frame) = frames.last_mut() {
            let u = frame.0;
            if frame.2 < frame.1.len() {
                let v = frame.1[frame.2];
                frame.2 += 1;
                if index[v] == UNVISITED {
                    index[v] = next_index;
                    low[v] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v] = true;
                    frames.push((v, successors(v).collect(), 0));
                } else if on_stack[v] {
                    low[u] = low[u].min(index[v]);
                }
                continue;
            }
            frames.pop();
            if let Some(parent) = frames.last() {
                let p = parent.0;
                low[p] = low[p].min(low[u]);
            }
            if low[u] == index[u] {
                while let Some(w) = stack.pop() {
                    on_stack[w] = false;
                    labels[w] = components as u32;
                    if w == u {
                        break;
                    }
                }
                components += 1;
            }
        }
    }
    (labels, components)
}

/// Nodes reachable from `start` following edges forward (or backward when
/// `reverse` is set).
pub fn reachable_from(adjacency: &AdjacencyMatrix, count: usize, start: usize, reverse: bool) -> Vec<bool> {
    let mut preds: Vec<Vec<usize>> = Vec::new();
    if reverse {
        preds = vec![Vec::new(); count];
        for u in 0..count {
            for v in adjacency.neighbors(u) {
                if (v as usize) < count {
                    preds[v as usize].push(u);
                }
            }
        }
    }
    let mut seen = vec![false; count];
    let mut todo = vec![start];
    seen[start] = true;
    while let Some(u) = todo.pop() {
        let next: Vec<usize> = if reverse {
            preds[u].clone()
        } else {
            adjacency.neighbors(u).map(|v| v as usize).filter(|&v| v < count).collect()
        };
        for v in next {
            if !seen[v] {
                seen[v] = true;
                todo.push(v);
            }
        }
    }
    seen
}
