//! Qualitative reachability and strongly connected components.

use std::collections::VecDeque;

use crate::model::Distribution;

/// Backward closure of `seeds` over the edges `s → t` with `t ∈ row(s)`,
/// considering only source states with `open[s]`.
fn backward_closure<'a, F>(
    n: usize,
    open: &[bool],
    row: &F,
    seeds: impl Iterator<Item = usize>,
) -> Vec<bool>
where
    F: Fn(usize) -> &'a Distribution,
{
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in (0..n).filter(|&s| open[s]) {
        for (t, _) in row(s) {
            preds[*t].push(s);
        }
    }
    let mut seen = vec![false; n];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for s in seeds {
        if !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(t) = queue.pop_front() {
        for &s in &preds[t] {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
    }
    seen
}

/// States that reach a goal with probability one, goals being absorbing.
///
/// A state qualifies iff it cannot reach a non-goal state from which the goal
/// is unreachable.
pub fn almost_sure<'a, F>(n: usize, is_goal: &[bool], row: F) -> Vec<bool>
where
    F: Fn(usize) -> &'a Distribution,
{
    let open: Vec<bool> = is_goal.iter().map(|g| !g).collect();
    let reach = backward_closure(n, &open, &row, (0..n).filter(|&s| is_goal[s]));
    if reach.iter().all(|&r| r) {
        return reach;
    }
    let doomed = backward_closure(n, &open, &row, (0..n).filter(|&s| !reach[s]));
    doomed.into_iter().map(|d| !d).collect()
}

/// Strongly connected components of the subgraph induced by `members`, in
/// reverse topological order: every component comes after all components it
/// can reach.
pub fn sccs<'a, F>(n: usize, members: &[bool], row: F) -> Vec<Vec<usize>>
where
    F: Fn(usize) -> &'a Distribution,
{
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut next = 0;
    // explicit DFS stack of (node, position in its successor list)
    let mut work: Vec<(usize, usize)> = Vec::new();

    for root in (0..n).filter(|&s| members[s]) {
        if index[root] != UNSEEN {
            continue;
        }
        work.push((root, 0));
        while let Some(&(v, start)) = work.last() {
            if start == 0 && index[v] == UNSEEN {
                index[v] = next;
                low[v] = next;
                next += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            let succ = row(v);
            let mut pos = start;
            let mut child = None;
            while pos < succ.len() {
                let w = succ[pos].0;
                pos += 1;
                if !members[w] {
                    continue;
                }
                if index[w] == UNSEEN {
                    child = Some(w);
                    break;
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            }
            work.last_mut().unwrap().1 = pos;
            if let Some(w) = child {
                work.push((w, 0));
                continue;
            }
            work.pop();
            if let Some(&(parent, _)) = work.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                out.push(comp);
            }
        }
    }
    out
}
