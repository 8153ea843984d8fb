//! Plain graph routines over adjacency lists.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

/// Strongly connected components (iterative Tarjan).
///
/// Nodes with `active[v] == false` are ignored, as are edges into them.
/// Returns a component id per node (`usize::MAX` for inactive nodes) and the
/// number of components.
pub fn scc(adj: &[Vec<usize>], active: &[bool]) -> (Vec<usize>, usize) {
    let n = adj.len();
    const NONE: usize = usize::MAX;
    let mut index = alloc::vec![NONE; n];
    let mut low = alloc::vec![0usize; n];
    let mut on_stack = alloc::vec![false; n];
    let mut comp = alloc::vec![NONE; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0;
    let mut count = 0;
    // (node, next edge position)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if !active[root] || index[root] != NONE {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(top) = call.last_mut() {
            let v = top.0;
            if let Some(&w) = adj[v].get(top.1) {
                top.1 += 1;
                if !active[w] {
                    continue;
                }
                if index[w] == NONE {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp[w] = count;
                        if w == v {
                            break;
                        }
                    }
                    count += 1;
                }
            }
        }
    }
    (comp, count)
}

/// Multi-source BFS distances; `None` marks unreachable nodes.
pub fn bfs_distances(adj: &[Vec<usize>], sources: impl IntoIterator<Item = usize>) -> Vec<Option<usize>> {
    let mut dist = alloc::vec![None; adj.len()];
    let mut queue = VecDeque::new();
    for s in sources {
        if dist[s].is_none() {
            dist[s] = Some(0);
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        let d = dist[v].expect("queued nodes have a distance") + 1;
        for &w in &adj[v] {
            if dist[w].is_none() {
                dist[w] = Some(d);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Reverses an adjacency list.
pub fn reverse(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut rev = alloc::vec![Vec::new(); adj.len()];
    for (v, succ) in adj.iter().enumerate() {
        for &w in succ {
            rev[w].push(v);
        }
    }
    for r in &mut rev {
        r.sort_unstable();
        r.dedup();
    }
    rev
}
