//! Synthetic benchmark generators: random tree- and DAG-shaped max-linear
//! networks with log-uniform edge coefficients and unit Fréchet innovations.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dag::{Dag, Edge};
use crate::innovations::Innovation;
use crate::model::MaxLinearNetwork;
use crate::rng::{stream, stream_rng};
use crate::tropical::TropicalMatrix;

// ---------------------------------------------------------------------------
// Errors and shape selection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenerateError {
    #[error("random networks need at least 2 nodes, got {d}")]
    TooFewNodes { d: usize },

    #[error("coefficient range must satisfy 0 < lo <= hi and be finite, got ({lo}, {hi})")]
    BadCoeffRange { lo: f64, hi: f64 },

    #[error("dag density must lie in (0, 1], got {density}")]
    BadDensity { density: f64 },
}

/// Graph shape of a generated network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkShape {
    /// Uniformly random labeled tree, oriented away from a uniform root.
    Tree,
    /// Random DAG: a uniform topological order with independent
    /// Bernoulli(density) edges from earlier to later nodes.
    Dag { density: f64 },
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

/// Generates a random max-linear network with unit Fréchet innovations and
/// edge coefficients log-uniform in `[lo, hi]`. Deterministic under `seed`.
pub fn random_network(
    d: usize,
    shape: NetworkShape,
    coeff_range: (f64, f64),
    seed: u64,
) -> Result<MaxLinearNetwork, GenerateError> {
    if d < 2 {
        return Err(GenerateError::TooFewNodes { d });
    }
    let (lo, hi) = coeff_range;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
        return Err(GenerateError::BadCoeffRange { lo, hi });
    }
    if let NetworkShape::Dag { density } = shape {
        if !(density.is_finite() && density > 0.0 && density <= 1.0) {
            return Err(GenerateError::BadDensity { density });
        }
    }

    let mut rng = stream_rng(seed, stream::GENERATE, seed);
    let mut edges = match shape {
        NetworkShape::Tree => random_rooted_tree(d, &mut rng),
        NetworkShape::Dag { density } => random_dag_edges(d, density, &mut rng),
    };
    // Coefficients are assigned in sorted edge order so the draw schedule
    // does not depend on how the shape generator emitted edges.
    edges.sort();
    let mut coeff = TropicalMatrix::zeros(d, d);
    for edge in &edges {
        let u: f64 = rng.gen();
        let c = lo * (hi / lo).powf(u);
        coeff.set(edge.child, edge.parent, c).expect("edge in range");
    }
    let dag = Dag::new(d, &edges).expect("generated edges form a DAG");
    let innovations = vec![Innovation::unit_frechet(); d];
    Ok(MaxLinearNetwork::new(dag, coeff, innovations).expect("support matches by construction"))
}

/// Uniform labeled tree on `d` nodes (decoded from a uniform Prüfer
/// sequence), oriented away from a uniformly chosen root.
fn random_rooted_tree(d: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<Edge> {
    // Uniform Prüfer sequence of length d - 2 gives a uniform labeled tree.
    let sequence: Vec<usize> = (0..d.saturating_sub(2)).map(|_| rng.gen_range(0..d)).collect();
    let mut degree = vec![1usize; d];
    for &s in &sequence {
        degree[s] += 1;
    }
    let mut leaves: BinaryHeap<Reverse<usize>> = (0..d)
        .filter(|&v| degree[v] == 1)
        .map(Reverse)
        .collect();
    let mut undirected: Vec<(usize, usize)> = Vec::with_capacity(d - 1);
    for &s in &sequence {
        let Reverse(leaf) = leaves.pop().expect("a tree always has a leaf");
        undirected.push((leaf, s));
        degree[s] -= 1;
        if degree[s] == 1 {
            leaves.push(Reverse(s));
        }
    }
    let Reverse(u) = leaves.pop().expect("two nodes remain");
    let Reverse(v) = leaves.pop().expect("two nodes remain");
    undirected.push((u, v));

    let root = rng.gen_range(0..d);
    orient_away_from(root, d, &undirected)
}

/// Orients an undirected tree away from `root` by breadth-first search.
fn orient_away_from(root: usize, d: usize, undirected: &[(usize, usize)]) -> Vec<Edge> {
    let mut adjacency = vec![Vec::new(); d];
    for &(a, b) in undirected {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    let mut edges = Vec::with_capacity(d - 1);
    let mut seen = vec![false; d];
    let mut queue = std::collections::VecDeque::from([root]);
    seen[root] = true;
    while let Some(parent) = queue.pop_front() {
        for &child in &adjacency[parent] {
            if !seen[child] {
                seen[child] = true;
                edges.push(Edge { parent, child });
                queue.push_back(child);
            }
        }
    }
    edges
}

/// Random DAG edges: shuffle a topological order, then include each
/// earlier-to-later pair independently with probability `density`.
fn random_dag_edges(d: usize, density: f64, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<Edge> {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for s in 0..d {
        for t in (s + 1)..d {
            if rng.gen::<f64>() < density {
                edges.push(Edge {
                    parent: order[s],
                    child: order[t],
                });
            }
        }
    }
    edges
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;
    use std::collections::HashMap;

    #[test]
    fn two_node_tree_is_a_single_edge_rooted_at_the_source() {
        for seed in 0..20 {
            let net = random_network(2, NetworkShape::Tree, (0.5, 2.0), seed).unwrap();
            let edges = net.dag().edges();
            assert_eq!(edges.len(), 1);
            assert_eq!(net.dag().roots(), vec![edges[0].parent]);
        }
    }

    #[test]
    fn twenty_node_tree_is_spanning_and_acyclic() {
        let net = random_network(20, NetworkShape::Tree, (0.5, 2.0), 7).unwrap();
        assert_eq!(net.dag().edges().len(), 19);
        let roots = net.dag().roots();
        assert_eq!(roots.len(), 1, "a tree has one root");
        // Every node is reachable from the root.
        let mut reach = net.dag().descendants(roots[0]);
        reach.push(roots[0]);
        reach.sort_unstable();
        assert_eq!(reach, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn identical_seeds_reproduce_the_network() {
        let a = random_network(12, NetworkShape::Tree, (0.3, 1.8), 99).unwrap();
        let b = random_network(12, NetworkShape::Tree, (0.3, 1.8), 99).unwrap();
        assert_eq!(a.dag().edges(), b.dag().edges());
        assert_eq!(a.coeff().as_slice(), b.coeff().as_slice());
        let c = random_network(12, NetworkShape::Tree, (0.3, 1.8), 100).unwrap();
        assert!(a.dag().edges() != c.dag().edges() || a.coeff().as_slice() != c.coeff().as_slice());
    }

    #[test]
    fn three_node_rooted_trees_are_uniform() {
        // 3 labeled trees x 3 roots = 9 rooted trees, each with mass 1/9.
        let n = 9000;
        let mut counts: HashMap<(usize, BTreeSet<(usize, usize)>), usize> = HashMap::new();
        for seed in 0..n {
            let net = random_network(3, NetworkShape::Tree, (1.0, 1.0), seed as u64).unwrap();
            let undirected: BTreeSet<(usize, usize)> = net
                .dag()
                .edges()
                .iter()
                .map(|e| (e.parent.min(e.child), e.parent.max(e.child)))
                .collect();
            let root = net.dag().roots()[0];
            *counts.entry((root, undirected)).or_default() += 1;
        }
        assert_eq!(counts.len(), 9, "all nine rooted trees appear");
        for (tree, count) in counts {
            // Binomial(9000, 1/9): mean 1000, sd ~29.8; allow 5 sd.
            assert!(
                (count as f64 - 1000.0).abs() < 150.0,
                "tree {tree:?} count {count}"
            );
        }
    }

    #[test]
    fn coefficients_are_log_uniform_in_range() {
        let (lo, hi) = (0.2, 3.0);
        let mut logs = Vec::new();
        for seed in 0..400 {
            let net = random_network(8, NetworkShape::Tree, (lo, hi), seed).unwrap();
            for e in net.dag().edges() {
                let c = net.coeff().get(e.child, e.parent);
                assert!((lo..=hi).contains(&c), "coefficient {c} out of range");
                logs.push(c.ln());
            }
        }
        let mean = crate::stats::mean(&logs);
        let want = (lo.ln() + hi.ln()) / 2.0;
        // Uniform on [ln lo, ln hi]: sd = width / sqrt(12).
        let se = (hi.ln() - lo.ln()) / 12f64.sqrt() / (logs.len() as f64).sqrt();
        assert!((mean - want).abs() < 4.0 * se, "mean log {mean}, want {want}");
    }

    #[test]
    fn full_density_dag_has_all_forward_edges() {
        let net = random_network(6, NetworkShape::Dag { density: 1.0 }, (0.5, 2.0), 3).unwrap();
        assert_eq!(net.dag().edges().len(), 6 * 5 / 2);
    }

    #[test]
    fn sparse_dag_edge_count_concentrates() {
        let mut total = 0usize;
        let trials = 200;
        for seed in 0..trials {
            let net =
                random_network(8, NetworkShape::Dag { density: 0.3 }, (0.5, 2.0), seed).unwrap();
            total += net.dag().edges().len();
        }
        let mean = total as f64 / trials as f64;
        // Binomial(28, 0.3) per trial: mean 8.4, sd ~2.4; SE over 200 ~0.17.
        assert!((mean - 8.4).abs() < 0.85, "mean edge count {mean}");
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert_eq!(
            random_network(1, NetworkShape::Tree, (0.5, 2.0), 0).unwrap_err(),
            GenerateError::TooFewNodes { d: 1 }
        );
        assert!(matches!(
            random_network(5, NetworkShape::Tree, (0.0, 2.0), 0).unwrap_err(),
            GenerateError::BadCoeffRange { .. }
        ));
        assert!(matches!(
            random_network(5, NetworkShape::Tree, (2.0, 1.0), 0).unwrap_err(),
            GenerateError::BadCoeffRange { .. }
        ));
        assert!(matches!(
            random_network(5, NetworkShape::Dag { density: 0.0 }, (0.5, 2.0), 0).unwrap_err(),
            GenerateError::BadDensity { .. }
        ));
        assert!(matches!(
            random_network(5, NetworkShape::Dag { density: 1.5 }, (0.5, 2.0), 0).unwrap_err(),
            GenerateError::BadDensity { .. }
        ));
    }
}
