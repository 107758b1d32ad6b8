//! End-to-end tree learning (scores then arborescence) and evaluation of
//! an estimated tree against a ground-truth graph.

use serde::{Deserialize, Serialize};

use crate::arborescence::{edmonds_arborescence, Arborescence, ArborescenceError, Objective};
use crate::dag::{Dag, Edge};
use crate::scores::{correlation_scores, qtree_scores, QtreeParams, ScoreError, ScoreMatrix};
use crate::simulate::ObservationSet;

// ---------------------------------------------------------------------------
// Errors and method selection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LearnError {
    #[error(transparent)]
    Score(#[from] ScoreError),

    #[error(transparent)]
    Arborescence(#[from] ArborescenceError),

    #[error("estimate has {estimate} nodes but truth has {truth}")]
    NodeMismatch { estimate: usize, truth: usize },
}

/// Scoring method for structure learning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnMethod {
    /// Concentration scores on lower-tail log-ratios, with coefficient
    /// estimates attached to the learned edges.
    Qtree(QtreeParams),
    /// Symmetric Pearson-correlation baseline (no coefficient estimates).
    Correlation,
}

/// Output of [`learn_tree`]: the tree and the scores that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnResult {
    pub tree: Arborescence,
    pub scores: ScoreMatrix,
}

/// Scores the observations with the chosen method and resolves the best
/// spanning arborescence (maximizing total score). `root` pins the root;
/// otherwise all roots are searched.
pub fn learn_tree(
    obs: &ObservationSet,
    method: &LearnMethod,
    root: Option<usize>,
) -> Result<LearnResult, LearnError> {
    let scores = match method {
        LearnMethod::Qtree(params) => qtree_scores(obs, params)?,
        LearnMethod::Correlation => correlation_scores(obs)?,
    };
    let tree = edmonds_arborescence(&scores, Objective::Maximize, root)?;
    Ok(LearnResult { tree, scores })
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Classification of an estimated tree's edges against a truth graph.
///
/// `correct + wrong + reversed` partitions the estimate's edges; `missed`
/// lists truth edges that were not recovered with the right orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub correct: Vec<Edge>,
    pub wrong: Vec<Edge>,
    pub reversed: Vec<Edge>,
    pub missed: Vec<Edge>,
    pub truth_edge_count: usize,
    /// correct / (d - 1): the fraction of estimated edges that are right.
    pub precision: f64,
    /// correct / |truth edges|: the fraction of the truth recovered.
    pub recall: f64,
}

/// Compares an estimated arborescence against the true graph on the same
/// node set. An estimated edge j -> i is `correct` if the truth contains
/// it, `reversed` if the truth contains i -> j, and `wrong` otherwise.
pub fn evaluate(estimate: &Arborescence, truth: &Dag) -> Result<EdgeReport, LearnError> {
    let d = estimate.node_count();
    if d != truth.node_count() {
        return Err(LearnError::NodeMismatch {
            estimate: d,
            truth: truth.node_count(),
        });
    }
    let truth_edges: std::collections::BTreeSet<Edge> = truth.edges().iter().copied().collect();
    let mut correct = Vec::new();
    let mut wrong = Vec::new();
    let mut reversed = Vec::new();
    for edge in estimate.edges() {
        if truth_edges.contains(&edge) {
            correct.push(edge);
        } else if truth_edges.contains(&Edge {
            parent: edge.child,
            child: edge.parent,
        }) {
            reversed.push(edge);
        } else {
            wrong.push(edge);
        }
    }
    let correct_set: std::collections::BTreeSet<Edge> = correct.iter().copied().collect();
    let missed: Vec<Edge> = truth
        .edges()
        .iter()
        .filter(|e| !correct_set.contains(e))
        .copied()
        .collect();

    let estimated = d.saturating_sub(1);
    let precision = if estimated == 0 {
        1.0
    } else {
        correct.len() as f64 / estimated as f64
    };
    let recall = if truth_edges.is_empty() {
        1.0
    } else {
        correct.len() as f64 / truth_edges.len() as f64
    };
    Ok(EdgeReport {
        correct,
        wrong,
        reversed,
        missed,
        truth_edge_count: truth_edges.len(),
        precision,
        recall,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
