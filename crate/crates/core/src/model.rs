//! Max-linear model types.
//!
//! Two flavours share the same algebra:
//!
//! * [`MaxLinearNetwork`] — the recursive form `X = C (x) X v Z` on a DAG,
//!   where `C[i][j] > 0` exactly when `j -> i` is an edge. Solving the
//!   recursion gives the explicit form `X = C* (x) Z` with the Kleene star
//!   `C*`, which is computed once at construction and cached.
//! * [`FactorModel`] — the flat form `X = C (x) Z` with a general
//!   nonnegative `d x p` coefficient matrix and `p` independent factors.
//!
//! Both carry one innovation specification per innovation coordinate.

use serde::{Deserialize, Serialize};

use crate::dag::{Dag, DagError, Edge};
use crate::innovations::{Innovation, InnovationError};
use crate::tropical::{kleene_star, TropicalError, TropicalMatrix};

/// Errors from model construction.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("coefficient matrix is {rows}x{cols}; a network needs a square matrix")]
    NotSquare { rows: usize, cols: usize },

    #[error(
        "coefficient support disagrees with the DAG at ({child}, {parent}): \
         matrix {matrix_positive}, graph edge {graph_edge}"
    )]
    SupportMismatch {
        child: usize,
        parent: usize,
        matrix_positive: bool,
        graph_edge: bool,
    },

    #[error("expected {expected} innovation specs, got {got}")]
    InnovationCount { expected: usize, got: usize },

    #[error(transparent)]
    Innovation(#[from] InnovationError),

    #[error(transparent)]
    Tropical(#[from] TropicalError),

    #[error(transparent)]
    Dag(#[from] DagError),
}

/// Recursive max-linear model on a DAG with cached Kleene star.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxLinearNetwork {
    dag: Dag,
    coeff: TropicalMatrix,
    star: TropicalMatrix,
    innovations: Vec<Innovation>,
}

impl MaxLinearNetwork {
    /// Builds a network from an edge-coefficient matrix and a DAG, checking
    /// that the positive support of the matrix is exactly the edge set.
    pub fn new(
        dag: Dag,
        coeff: TropicalMatrix,
        innovations: Vec<Innovation>,
    ) -> Result<Self, ModelError> {
        let d = dag.node_count();
        if coeff.rows() != d || coeff.cols() != d {
            return Err(ModelError::NotSquare {
                rows: coeff.rows(),
                cols: coeff.cols(),
            });
        }
        for child in 0..d {
            for parent in 0..d {
                let positive = coeff.get(child, parent) > 0.0;
                let edge = dag.parents(child).contains(&parent);
                if positive != edge {
                    return Err(ModelError::SupportMismatch {
                        child,
                        parent,
                        matrix_positive: positive,
                        graph_edge: edge,
                    });
                }
            }
        }
        if innovations.len() != d {
            return Err(ModelError::InnovationCount {
                expected: d,
                got: innovations.len(),
            });
        }
        for spec in &innovations {
            spec.validate()?;
        }
        let star = kleene_star(&coeff)?;
        Ok(MaxLinearNetwork {
            dag,
            coeff,
            star,
            innovations,
        })
    }

    /// Builds a network from the coefficient matrix alone, deriving the DAG
    /// from the positive support (errors if the support is cyclic).
    pub fn from_coeff(
        coeff: TropicalMatrix,
        innovations: Vec<Innovation>,
    ) -> Result<Self, ModelError> {
        if coeff.rows() != coeff.cols() {
            return Err(ModelError::NotSquare {
                rows: coeff.rows(),
                cols: coeff.cols(),
            });
        }
        let edges: Vec<Edge> = coeff
            .support()
            .map(|(child, parent)| Edge::new(parent, child))
            .collect();
        let dag = Dag::new(coeff.rows(), &edges)?;
        MaxLinearNetwork::new(dag, coeff, innovations)
    }

    pub fn node_count(&self) -> usize {
        self.dag.node_count()
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    /// Edge-coefficient matrix (`C[i][j] > 0` iff `j -> i`).
    pub fn coeff(&self) -> &TropicalMatrix {
        &self.coeff
    }

    /// Cached Kleene star `C*`.
    pub fn star(&self) -> &TropicalMatrix {
        &self.star
    }

    pub fn innovations(&self) -> &[Innovation] {
        &self.innovations
    }

    /// The explicit factor form `X = C* (x) Z` of this network.
    pub fn as_factor_model(&self) -> FactorModel {
        FactorModel {
            coeff: self.star.clone(),
            innovations: self.innovations.clone(),
        }
    }
}

/// Flat max-linear factor model `X = C (x) Z` with `C` of shape `d x p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorModel {
    coeff: TropicalMatrix,
    innovations: Vec<Innovation>,
}

impl FactorModel {
    pub fn new(coeff: TropicalMatrix, innovations: Vec<Innovation>) -> Result<Self, ModelError> {
        if innovations.len() != coeff.cols() {
            return Err(ModelError::InnovationCount {
                expected: coeff.cols(),
                got: innovations.len(),
            });
        }
        for spec in &innovations {
            spec.validate()?;
        }
        Ok(FactorModel { coeff, innovations })
    }

    /// Observed dimension `d`.
    pub fn dim(&self) -> usize {
        self.coeff.rows()
    }

    /// Number of factors `p`.
    pub fn factor_count(&self) -> usize {
        self.coeff.cols()
    }

    pub fn coeff(&self) -> &TropicalMatrix {
        &self.coeff
    }

    pub fn innovations(&self) -> &[Innovation] {
        &self.innovations
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tolerance::rel_close;

    fn chain_coeff() -> TropicalMatrix {
        TropicalMatrix::from_rows(&[
            vec![0.0, 0.0, 0.0],
            vec![2.0, 0.0, 0.0],
            vec![0.0, 3.0, 0.0],
        ])
        .unwrap()
    }

    fn unit_frechets(d: usize) -> Vec<Innovation> {
        vec![Innovation::unit_frechet(); d]
    }

    #[test]
    fn network_from_coeff_derives_dag_and_star() {
        let net = MaxLinearNetwork::from_coeff(chain_coeff(), unit_frechets(3)).unwrap();
        assert_eq!(net.dag().edges(), &[Edge::new(0, 1), Edge::new(1, 2)]);
        assert!(rel_close(net.star().get(2, 0), 6.0, 1e-9));
        assert_eq!(net.as_factor_model().factor_count(), 3);
    }

    #[test]
    fn network_rejects_support_mismatch() {
        let dag = Dag::new(3, &[Edge::new(0, 1)]).unwrap(); // missing 1 -> 2
        let err = MaxLinearNetwork::new(dag, chain_coeff(), unit_frechets(3)).unwrap_err();
        assert!(matches!(
            err,
            ModelError::SupportMismatch { child: 2, parent: 1, matrix_positive: true, graph_edge: false }
        ));
    }

    #[test]
    fn network_rejects_cyclic_support() {
        let mut c = TropicalMatrix::zeros(2, 2);
        c.set(0, 1, 1.0).unwrap();
        c.set(1, 0, 1.0).unwrap();
        let err = MaxLinearNetwork::from_coeff(c, unit_frechets(2)).unwrap_err();
        assert!(matches!(err, ModelError::Dag(DagError::Cycle { .. })));
    }

    #[test]
    fn network_rejects_wrong_innovation_count_and_bad_specs() {
        assert!(matches!(
            MaxLinearNetwork::from_coeff(chain_coeff(), unit_frechets(2)).unwrap_err(),
            ModelError::InnovationCount { expected: 3, got: 2 }
        ));
        let bad = vec![
            Innovation::unit_frechet(),
            Innovation::Frechet { shape: -1.0, scale: 1.0 },
            Innovation::unit_frechet(),
        ];
        assert!(matches!(
            MaxLinearNetwork::from_coeff(chain_coeff(), bad).unwrap_err(),
            ModelError::Innovation(_)
        ));
    }

    #[test]
    fn factor_model_validates_innovation_count() {
        let c = TropicalMatrix::from_flat(2, 3, &[1.0, 0.5, 0.0, 0.0, 1.0, 2.0]).unwrap();
        assert!(FactorModel::new(c.clone(), unit_frechets(2)).is_err());
        let fm = FactorModel::new(c, unit_frechets(3)).unwrap();
        assert_eq!(fm.dim(), 2);
        assert_eq!(fm.factor_count(), 3);
    }
}
