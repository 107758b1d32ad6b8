//! Optimal spanning arborescences over score matrices via the
//! Chu-Liu/Edmonds contraction algorithm, with a total deterministic
//! tie-break and an exhaustive root search.

use serde::{Deserialize, Serialize};

use crate::dag::{Dag, Edge};
use crate::scores::ScoreMatrix;

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ArborescenceError {
    #[error("score matrix is empty")]
    EmptyMatrix,

    #[error("requested root {root} is out of range for {d} nodes")]
    RootOutOfRange { root: usize, d: usize },

    #[error(
        "no spanning arborescence exists: nodes {unreachable:?} are unreachable \
         from root {root} over usable score entries"
    )]
    NoArborescence { root: usize, unreachable: Vec<usize> },
}

/// Direction of optimization over total score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Maximize,
    Minimize,
}

/// A spanning directed tree: every non-root node has exactly one parent and
/// reaches the root by parent links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arborescence {
    root: usize,
    /// `parent[v]` is `None` exactly at the root.
    parent: Vec<Option<usize>>,
    /// Per-node estimated coefficient of the incoming edge, when the
    /// scorer supplied one.
    coeff: Vec<Option<f64>>,
}

impl Arborescence {
    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    /// Estimated coefficient of the edge into `v`, if any.
    pub fn coeff(&self, v: usize) -> Option<f64> {
        self.coeff[v]
    }

    /// Edges in ascending child order.
    pub fn edges(&self) -> Vec<Edge> {
        (0..self.parent.len())
            .filter_map(|child| {
                self.parent[child].map(|parent| Edge { parent, child })
            })
            .collect()
    }

    /// Total score under `scores`, summed in ascending child order — the
    /// shared arithmetic used when comparing against enumeration oracles.
    pub fn total_score(&self, scores: &ScoreMatrix) -> f64 {
        let mut total = 0.0;
        for child in 0..self.parent.len() {
            if let Some(parent) = self.parent[child] {
                total += scores
                    .score(child, parent)
                    .expect("chosen edges are always usable");
            }
        }
        total
    }

    /// The same tree as a general DAG (for evaluation against a truth DAG).
    pub fn to_dag(&self) -> Dag {
        Dag::new(self.parent.len(), &self.edges()).expect("a tree is acyclic")
    }

    /// Builds an arborescence from an explicit parent map (tests, I/O).
    /// Panics if the map is not a spanning tree rooted as claimed.
    pub fn from_parent_map(root: usize, parent: Vec<Option<usize>>, coeff: Vec<Option<f64>>) -> Self {
        assert_eq!(parent.len(), coeff.len(), "coefficient length mismatch");
        assert!(root < parent.len(), "root out of range");
        assert!(parent[root].is_none(), "root must have no parent");
        for (v, p) in parent.iter().enumerate() {
            if v != root {
                assert!(p.is_some(), "non-root node {v} lacks a parent");
            }
        }
        // Every node must reach the root without revisiting (no cycles).
        for start in 0..parent.len() {
            let mut seen = vec![false; parent.len()];
            let mut v = start;
            while let Some(p) = parent[v] {
                assert!(!seen[v], "cycle through node {v}");
                seen[v] = true;
                v = p;
            }
            assert_eq!(v, root, "node {start} does not reach the root");
        }
        Arborescence { root, parent, coeff }
    }
}

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

/// One candidate edge; `key` is the original (parent, child) pair, fixed
/// across contractions, used for tie-breaking and final expansion.
#[derive(Debug, Clone, Copy)]
struct Cand {
    parent: usize,
    child: usize,
    weight: f64,
    key: (usize, usize),
}

/// `a` beats `b`: strictly higher weight, then smaller original parent,
/// then smaller original child.
fn beats(a: &Cand, b: &Cand) -> bool {
    if a.weight != b.weight {
        return a.weight > b.weight;
    }
    a.key < b.key
}

/// Finds the optimal spanning arborescence of `scores`. Unusable entries
/// are absent edges. With `root = None`, all candidate roots are tried and
/// the best objective wins; root-level ties keep the smallest root index.
/// Edge-level ties break by (score, smaller parent index, smaller child
/// index), making the result fully deterministic.
pub fn edmonds_arborescence(
    scores: &ScoreMatrix,
    objective: Objective,
    root: Option<usize>,
) -> Result<Arborescence, ArborescenceError> {
    let d = scores.dim();
    if d == 0 {
        return Err(ArborescenceError::EmptyMatrix);
    }
    if let Some(r) = root {
        if r >= d {
            return Err(ArborescenceError::RootOutOfRange { root: r, d });
        }
    }

    // Usable edges, negated for minimization (exact: negation is lossless).
    let sign = match objective {
        Objective::Maximize => 1.0,
        Objective::Minimize => -1.0,
    };
    let mut edges = Vec::new();
    for child in 0..d {
        for parent in 0..d {
            if parent != child {
                if let Some(s) = scores.score(child, parent) {
                    edges.push(Cand {
                        parent,
                        child,
                        weight: sign * s,
                        key: (parent, child),
                    });
                }
            }
        }
    }

    let candidates: Vec<usize> = match root {
        Some(r) => vec![r],
        None => (0..d).collect(),
    };

    let mut best: Option<(f64, Arborescence)> = None;
    let mut best_failure: Option<(usize, Vec<usize>)> = None;
    for &r in &candidates {
        let unreachable = unreachable_from(d, r, &edges);
        if !unreachable.is_empty() {
            // Remember the most-connecting root for the error report.
            let better = match &best_failure {
                None => true,
                Some((_, prev)) => unreachable.len() < prev.len(),
            };
            if better {
                best_failure = Some((r, unreachable));
            }
            continue;
        }
        let chosen = solve(d, r, &edges);
        let mut parent = vec![None; d];
        let mut coeff = vec![None; d];
        for (p, c) in chosen {
            parent[c] = Some(p);
            coeff[c] = scores.coeff(c, p);
        }
        let arb = Arborescence { root: r, parent, coeff };
        let total = sign * arb.total_score(scores);
        let better = match &best {
            None => true,
            Some((prev, _)) => total > *prev,
        };
        if better {
            best = Some((total, arb));
        }
    }

    match best {
        Some((_, arb)) => Ok(arb),
        None => {
            let (root, unreachable) =
                best_failure.expect("every candidate root failed, so one was recorded");
            Err(ArborescenceError::NoArborescence { root, unreachable })
        }
    }
}

/// Nodes not reachable from `root` over the given edges, ascending.
fn unreachable_from(d: usize, root: usize, edges: &[Cand]) -> Vec<usize> {
    let mut children = vec![Vec::new(); d];
    for e in edges {
        children[e.parent].push(e.child);
    }
    let mut seen = vec![false; d];
    let mut stack = vec![root];
    seen[root] = true;
    while let Some(u) = stack.pop() {
        for &v in &children[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    (0..d).filter(|&v| !seen[v]).collect()
}

/// Recursive contraction step. All nodes are reachable from `root`, so a
/// spanning arborescence exists; returns its edges as original
/// (parent, child) keys. Maximization only (negate upstream to minimize).
fn solve(n: usize, root: usize, edges: &[Cand]) -> Vec<(usize, usize)> {
    // Best incoming candidate per node.
    let mut best_in: Vec<Option<Cand>> = vec![None; n];
    for e in edges {
        if e.child == root {
            continue;
        }
        match &best_in[e.child] {
            Some(current) if !beats(e, current) => {}
            _ => best_in[e.child] = Some(*e),
        }
    }

    // Detect a cycle among the chosen parent pointers.
    let cycle = find_cycle(n, root, &best_in);
    let Some(cycle) = cycle else {
        // No cycle: the best-incoming choices already form the optimum.
        return (0..n)
            .filter(|&v| v != root)
            .map(|v| best_in[v].expect("reachable node has an incoming edge").key)
            .collect();
    };

    // Contract the cycle into one supernode with compacted labels.
    let mut in_cycle = vec![false; n];
    for &v in &cycle {
        in_cycle[v] = true;
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for v in 0..n {
        if !in_cycle[v] {
            label[v] = next;
            next += 1;
        }
    }
    let super_node = next;
    for &v in &cycle {
        label[v] = super_node;
    }

    let mut contracted = Vec::new();
    // Maps an original edge key to the cycle node (current-level label) it
    // enters, for edges absorbed into the supernode's incoming set.
    let mut entry_point = std::collections::HashMap::new();
    for e in edges {
        let (u, v) = (e.parent, e.child);
        match (in_cycle[u], in_cycle[v]) {
            (false, false) => contracted.push(Cand {
                parent: label[u],
                child: label[v],
                weight: e.weight,
                key: e.key,
            }),
            // Entering the cycle at v means giving up v's current best
            // edge, so the gain is the difference.
            (false, true) => {
                entry_point.insert(e.key, v);
                contracted.push(Cand {
                    parent: label[u],
                    child: super_node,
                    weight: e.weight - best_in[v].expect("cycle node has a best edge").weight,
                    key: e.key,
                });
            }
            (true, false) => contracted.push(Cand {
                parent: super_node,
                child: label[v],
                weight: e.weight,
                key: e.key,
            }),
            (true, true) => {}
        }
    }

    let sub = solve(super_node + 1, label[root], &contracted);

    // Expand: find where the solution enters the cycle, then keep every
    // cycle edge except the one into the entry node.
    let mut chosen = Vec::new();
    let mut entry: Option<usize> = None;
    for key in sub {
        if let Some(&v) = entry_point.get(&key) {
            debug_assert!(entry.is_none(), "exactly one edge enters the cycle");
            entry = Some(v);
        }
        chosen.push(key);
    }
    let entry = entry.expect("the contracted solution reaches the supernode");
    for &v in &cycle {
        if v != entry {
            chosen.push(best_in[v].expect("cycle node has a best edge").key);
        }
    }
    chosen
}

/// First cycle (by smallest starting node) among best-incoming pointers.
fn find_cycle(n: usize, root: usize, best_in: &[Option<Cand>]) -> Option<Vec<usize>> {
    // 0 = unvisited, 1 = on current path, 2 = done
    let mut state = vec![0u8; n];
    state[root] = 2;
    for start in 0..n {
        if state[start] != 0 {
            continue;
        }
        let mut path = Vec::new();
        let mut v = start;
        loop {
            if state[v] == 1 {
                // Found a cycle: the suffix of `path` from v.
                let pos = path.iter().position(|&u| u == v).expect("v is on the path");
                return Some(path[pos..].to_vec());
            }
            if state[v] == 2 {
                break;
            }
            state[v] = 1;
            path.push(v);
            v = best_in[v].expect("non-root node has a best edge").parent;
        }
        for u in path {
            state[u] = 2;
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
