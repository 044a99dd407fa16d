use std::collections::VecDeque;

use super::{LinalgError, SparsityPattern};

/// Symmetric renumbering of unknowns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    /// old index -> new index
    forward: Vec<usize>,
    /// new index -> old index
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            forward: (0..n).collect(),
            inverse: (0..n).collect(),
        }
    }

    /// Builds a permutation from the new -> old map. Returns `None` unless
    /// `inverse` is a bijection on `0..n`.
    pub fn from_inverse(inverse: Vec<usize>) -> Option<Self> {
        let n = inverse.len();
        let mut forward = vec![usize::MAX; n];
        for (new, &old) in inverse.iter().enumerate() {
            if old >= n || forward[old] != usize::MAX {
                return None;
            }
            forward[old] = new;
        }
        Some(Self { forward, inverse })
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &f)| i == f)
    }
}

/// Reverse Cuthill-McKee ordering of a structurally symmetric pattern.
///
/// Each connected component is started from a pseudo-peripheral vertex
/// (George-Liu). If the result would widen the band, the natural ordering is
/// returned instead so the permuted bandwidth never exceeds the original one.
pub fn compute_ordering(pattern: &SparsityPattern) -> Result<Permutation, LinalgError> {
    pattern.check_symmetric()?;
    let n = pattern.n();
    if let Some(row) = (0..n).find(|&i| pattern.row(i).is_empty()) {
        return Err(LinalgError::EmptyRow { row });
    }

    let degree: Vec<usize> = (0..n)
        .map(|i| pattern.row(i).iter().filter(|&&j| j != i).count())
        .collect();

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut neighbors = Vec::new();
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        let component = collect_component(pattern, seed);
        let start = pseudo_peripheral(pattern, &degree, &component);

        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            neighbors.clear();
            neighbors.extend(pattern.row(v).iter().copied().filter(|&w| w != v && !visited[w]));
            neighbors.sort_by_key(|&w| (degree[w], w));
            for &w in &neighbors {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();

    let rcm = Permutation::from_inverse(order).expect("BFS visits every vertex exactly once");
    if pattern.permuted_bandwidth(rcm.forward()) > pattern.bandwidth() {
        Ok(Permutation::identity(n))
    } else {
        Ok(rcm)
    }
}

fn collect_component(pattern: &SparsityPattern, seed: usize) -> Vec<usize> {
    let mut seen = vec![false; pattern.n()];
    let mut stack = vec![seed];
    let mut out = Vec::new();
    seen[seed] = true;
    while let Some(v) = stack.pop() {
        out.push(v);
        for &w in pattern.row(v) {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Level structure rooted at `root`: (eccentricity, vertices of the last level).
fn level_structure(pattern: &SparsityPattern, root: usize, level: &mut [usize]) -> (usize, Vec<usize>) {
    let mut queue = VecDeque::from([root]);
    let mut touched = vec![root];
    level[root] = 0;
    let mut depth = 0;
    while let Some(v) = queue.pop_front() {
        depth = depth.max(level[v]);
        for &w in pattern.row(v) {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                touched.push(w);
                queue.push_back(w);
            }
        }
    }
    let last: Vec<usize> = touched.iter().copied().filter(|&v| level[v] == depth).collect();
    for v in touched {
        level[v] = usize::MAX;
    }
    (depth, last)
}

fn pseudo_peripheral(pattern: &SparsityPattern, degree: &[usize], component: &[usize]) -> usize {
    let mut level = vec![usize::MAX; pattern.n()];
    let mut root = *component
        .iter()
        .min_by_key(|&&v| (degree[v], v))
        .expect("component is never empty");
    let (mut ecc, mut last) = level_structure(pattern, root, &mut level);
    loop {
        let candidate = *last
            .iter()
            .min_by_key(|&&v| (degree[v], v))
            .expect("last level is never empty");
        let (cand_ecc, cand_last) = level_structure(pattern, candidate, &mut level);
        if cand_ecc > ecc {
            root = candidate;
            ecc = cand_ecc;
            last = cand_last;
        } else {
            return root;
        }
    }
}
