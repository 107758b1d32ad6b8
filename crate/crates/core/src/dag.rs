//! Directed acyclic graphs over nodes `0..d` with cached closures.
//!
//! Edges are directed parent -> child. Construction validates indices,
//! rejects self-loops and duplicates, and refuses cyclic edge sets with an
//! error that names one offending cycle. Topological order and the
//! ancestor/descendant closures are computed once at construction; the
//! graphs here are desk-scale (tens of nodes), so dense boolean closures
//! are the simplest correct representation.

use serde::{Deserialize, Serialize};

/// One directed edge, parent -> child.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub parent: usize,
    pub child: usize,
}

impl Edge {
    pub fn new(parent: usize, child: usize) -> Self {
        Edge { parent, child }
    }
}

/// Errors from DAG construction.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DagError {
    #[error("edge {parent} -> {child} references a node outside 0..{d}")]
    NodeOutOfRange { parent: usize, child: usize, d: usize },

    #[error("edge {node} -> {node} is a self-loop")]
    SelfLoop { node: usize },

    #[error("edge {parent} -> {child} appears more than once")]
    DuplicateEdge { parent: usize, child: usize },

    #[error("edge set contains a cycle: {}", format_cycle(cycle))]
    Cycle { cycle: Vec<usize> },
}

fn format_cycle(cycle: &[usize]) -> String {
    let mut out = String::new();
    for (pos, node) in cycle.iter().enumerate() {
        if pos > 0 {
            out.push_str(" -> ");
        }
        out.push_str(&node.to_string());
    }
    if let Some(first) = cycle.first() {
        out.push_str(" -> ");
        out.push_str(&first.to_string());
    }
    out
}

/// A validated DAG with cached topological order and closures.
#[derive(Debug, Clone, PartialEq)]
pub struct Dag {
    d: usize,
    edges: Vec<Edge>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
    /// `ancestor[v * d + u]` = `u` is a strict ancestor of `v`.
    ancestor: Vec<bool>,
}

impl Dag {
    /// Builds a DAG on `d` nodes from parent -> child edges.
    pub fn new(d: usize, edges: &[Edge]) -> Result<Self, DagError> {
        let mut parents: Vec<Vec<usize>> = vec![Vec::new(); d];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); d];
        let mut sorted = edges.to_vec();
        sorted.sort_unstable();
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                return Err(DagError::DuplicateEdge {
                    parent: pair[0].parent,
                    child: pair[0].child,
                });
            }
        }
        for &Edge { parent, child } in edges {
            if parent >= d || child >= d {
                return Err(DagError::NodeOutOfRange { parent, child, d });
            }
            if parent == child {
                return Err(DagError::SelfLoop { node: parent });
            }
            parents[child].push(parent);
            children[parent].push(child);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }

        let topo = topological_order(d, &parents, &children)
            .map_err(|cycle| DagError::Cycle { cycle })?;

        // Ancestor closure in topological order: anc(v) = union over
        // parents p of anc(p) + {p}.
        let mut ancestor = vec![false; d * d];
        for &v in &topo {
            for &p in &parents[v] {
                ancestor[v * d + p] = true;
                for u in 0..d {
                    if ancestor[p * d + u] {
                        ancestor[v * d + u] = true;
                    }
                }
            }
        }

        let mut edges = edges.to_vec();
        edges.sort_unstable();
        Ok(Dag {
            d,
            edges,
            parents,
            children,
            topo,
            ancestor,
        })
    }

    pub fn node_count(&self) -> usize {
        self.d
    }

    /// Edges sorted by (parent, child).
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn parents(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    /// A deterministic topological order (smallest index first among ready
    /// nodes); parents always precede children.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// Whether `u` is a strict ancestor of `v` (there is a directed path
    /// `u -> ... -> v` with at least one edge).
    pub fn is_ancestor(&self, u: usize, v: usize) -> bool {
        self.ancestor[v * self.d + u]
    }

    /// Strict ancestors of `v`, ascending.
    pub fn ancestors(&self, v: usize) -> Vec<usize> {
        (0..self.d).filter(|&u| self.is_ancestor(u, v)).collect()
    }

    /// Strict descendants of `u`, ascending.
    pub fn descendants(&self, u: usize) -> Vec<usize> {
        (0..self.d).filter(|&v| self.is_ancestor(u, v)).collect()
    }

    /// Nodes without parents, ascending.
    pub fn roots(&self) -> Vec<usize> {
        (0..self.d).filter(|&v| self.parents[v].is_empty()).collect()
    }
}

/// Kahn's algorithm with an ascending-index tie rule; on failure returns one
/// cycle found by walking never-ready nodes along parent links.
fn topological_order(
    d: usize,
    parents: &[Vec<usize>],
    children: &[Vec<usize>],
) -> Result<Vec<usize>, Vec<usize>> {
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut order = Vec::with_capacity(d);
    let mut ready: Vec<usize> = (0..d).filter(|&v| indegree[v] == 0).collect();
    // Keep `ready` sorted descending so pop() yields the smallest index.
    ready.sort_unstable_by(|a, b| b.cmp(a));
    while let Some(v) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                let pos = ready.partition_point(|&x| x > c);
                ready.insert(pos, c);
            }
        }
    }
    if order.len() == d {
        return Ok(order);
    }
    // Some node still has positive indegree: walk parent links among the
    // remaining nodes until a repeat closes a cycle.
    let remaining: Vec<usize> = (0..d).filter(|&v| indegree[v] > 0).collect();
    let start = remaining[0];
    let mut seen_at = vec![usize::MAX; d];
    let mut walk = Vec::new();
    let mut cur = start;
    loop {
        if seen_at[cur] != usize::MAX {
            let cycle: Vec<usize> = walk[seen_at[cur]..].to_vec();
            let mut cycle = cycle;
            cycle.reverse(); // parent-link walk is reversed edge direction
            return Err(cycle);
        }
        seen_at[cur] = walk.len();
        walk.push(cur);
        // Follow any parent that is itself still blocked (must exist).
        cur = *parents[cur]
            .iter()
            .find(|&&p| indegree[p] > 0)
            .expect("blocked node must have a blocked parent");
    }
}
