//! Randomized algebraic invariants of the tropical kernel and the
//! edge-report partition, checked with proptest over generated matrices.

use proptest::prelude::*;

use tropex_core::arborescence::Arborescence;
use tropex_core::dag::{Dag, Edge};
use tropex_core::learn::evaluate;
use tropex_core::tolerance::rel_close;
use tropex_core::tropical::{
    cone_membership, is_fixed_point, kleene_star, trop_matmul, trop_matvec, TropicalMatrix,
};

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

/// One matrix entry: zero (absent) or a positive weight spanning several
/// orders of magnitude.
fn entry() -> impl Strategy<Value = f64> {
    prop_oneof![
        2 => Just(0.0),
        5 => (-4.0f64..4.0).prop_map(f64::exp),
    ]
}

/// Dense-ish square matrix of side `d` with nonnegative entries.
fn square(d: usize) -> impl Strategy<Value = TropicalMatrix> {
    proptest::collection::vec(entry(), d * d)
        .prop_map(move |cells| TropicalMatrix::from_flat(d, d, &cells).unwrap())
}

/// Strictly lower-triangular (hence acyclic) matrix of side `d`.
fn dag_matrix(d: usize) -> impl Strategy<Value = TropicalMatrix> {
    proptest::collection::vec(entry(), d * d).prop_map(move |cells| {
        let mut m = TropicalMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..i {
                m.set(i, j, cells[i * d + j]).unwrap();
            }
        }
        m
    })
}

/// Nonnegative vector of length `d`, with occasional exact zeros.
fn nonneg_vec(d: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(
        prop_oneof![1 => Just(0.0), 6 => (-3.0f64..3.0).prop_map(f64::exp)],
        d,
    )
}

/// Parent choices (parent[v] < v + 1 indexes into 0..=v) that always form
/// an arborescence rooted at node 0 once decoded.
fn parent_choices(d: usize) -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::vec(0usize..usize::MAX, d - 1)
        .prop_map(move |raw| raw.iter().enumerate().map(|(i, r)| r % (i + 1)).collect())
}

fn entrywise_close(a: &TropicalMatrix, b: &TropicalMatrix, tol: f64) -> bool {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .all(|(&x, &y)| rel_close(x, y, tol))
}

// ---------------------------------------------------------------------------
// Tropical algebra
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn matrix_product_is_associative(
        (a, b, c) in (2usize..=6).prop_flat_map(|d| (square(d), square(d), square(d)))
    ) {
        let left = trop_matmul(&trop_matmul(&a, &b).unwrap(), &c).unwrap();
        let right = trop_matmul(&a, &trop_matmul(&b, &c).unwrap()).unwrap();
        prop_assert!(entrywise_close(&left, &right, 1e-12));
    }

    #[test]
    fn identity_is_neutral_for_the_product(
        a in (2usize..=6).prop_flat_map(square)
    ) {
        let id = TropicalMatrix::identity(a.rows());
        let left = trop_matmul(&id, &a).unwrap();
        let right = trop_matmul(&a, &id).unwrap();
        prop_assert!(entrywise_close(&left, &a, 1e-12));
        prop_assert!(entrywise_close(&right, &a, 1e-12));
    }

    #[test]
    fn kleene_star_is_idempotent(
        c in (2usize..=8).prop_flat_map(dag_matrix)
    ) {
        let star = kleene_star(&c).unwrap();
        let squared = trop_matmul(&star, &star).unwrap();
        prop_assert!(entrywise_close(&squared, &star, 1e-12));
    }

    #[test]
    fn kleene_star_is_monotone(
        (c, bumps) in (2usize..=8).prop_flat_map(|d| {
            (dag_matrix(d), proptest::collection::vec(0.0f64..2.0, d * d))
        })
    ) {
        // Grow every present entry; the support (and thus acyclicity) is
        // unchanged, so both stars exist and must be ordered.
        let d = c.rows();
        let mut bigger = c.clone();
        for (i, j) in c.support().collect::<Vec<_>>() {
            bigger.set(i, j, c.get(i, j) * (1.0 + bumps[i * d + j])).unwrap();
        }
        let small_star = kleene_star(&c).unwrap();
        let big_star = kleene_star(&bigger).unwrap();
        for (x, y) in small_star.as_slice().iter().zip(big_star.as_slice()) {
            prop_assert!(*x <= *y * (1.0 + 1e-12));
        }
    }

    #[test]
    fn products_lie_in_the_column_cone(
        (c, z) in (2usize..=8).prop_flat_map(|d| (dag_matrix(d), nonneg_vec(d)))
    ) {
        let x = trop_matvec(&c, &z).unwrap();
        let membership = cone_membership(&c, &x, 1e-9).unwrap();
        prop_assert!(membership.member);
    }

    #[test]
    fn star_products_are_fixed_points(
        (c, z) in (2usize..=8).prop_flat_map(|d| (dag_matrix(d), nonneg_vec(d)))
    ) {
        let star = kleene_star(&c).unwrap();
        let x = trop_matvec(&star, &z).unwrap();
        prop_assert!(is_fixed_point(&star, &x, 1e-9).unwrap());
    }
}

// ---------------------------------------------------------------------------
// Edge-report partition
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn edge_report_partitions_the_estimate(
        (estimate, truth) in (3usize..=10).prop_flat_map(|d| {
            (parent_choices(d), parent_choices(d))
        })
    ) {
        let d = estimate.len() + 1;
        let decode = |choices: &[usize]| {
            let mut parents: Vec<Option<usize>> = vec![None; d];
            for (v, &p) in choices.iter().enumerate() {
                parents[v + 1] = Some(p);
            }
            parents
        };
        let est = Arborescence::from_parent_map(0, decode(&estimate), vec![None; d]);
        let truth_edges: Vec<Edge> = decode(&truth)
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|p| Edge::new(p, v)))
            .collect();
        let truth_dag = Dag::new(d, &truth_edges).unwrap();
        let report = evaluate(&est, &truth_dag).unwrap();
        let partition = report.correct.len() + report.wrong.len() + report.reversed.len();
        prop_assert_eq!(partition, d - 1);
        prop_assert!(rel_close(
            report.precision,
            report.correct.len() as f64 / (d - 1) as f64,
            1e-12,
        ));
        prop_assert_eq!(report.correct.len() + report.missed.len(), report.truth_edge_count);
    }
}
