//! Structural form of the conditional law `X_Kbar | X_K = x_K`.
//!
//! For a recursive max-linear network with Kleene star `C*`, conditioning
//! on `X_K = x_K` splits the star into four blocks: the complement
//! coordinates satisfy
//!
//! ```text
//! X_Kbar = (C*_{Kbar,K} (.)  x_K)  v  (C*_{Kbar,Kbar} (x) Z_Kbar)
//! ```
//!
//! subject to the constraint `x_K = (C*_{K,K} (x) Z_K) v (C*_{K,Kbar} (x)
//! Z_Kbar)`. Extraction is pure block selection plus the fixed offset
//! vector; the constrained factor law itself lives in the scenario
//! sampler.

use serde::{Deserialize, Serialize};

use crate::model::MaxLinearNetwork;
use crate::scenarios::ConditioningEvent;
use crate::tropical::TropicalMatrix;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RepresentationError {
    #[error("conditioned node {node} is out of range for {d} nodes")]
    NodeOutOfRange { node: usize, d: usize },
}

// ---------------------------------------------------------------------------
// Conditional representation
// ---------------------------------------------------------------------------

/// The four-block conditional form of a network at one event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalRepresentation {
    event: ConditioningEvent,
    /// Complement coordinates, ascending.
    complement: Vec<usize>,
    /// Fixed offset `C*_{Kbar,K} (.) x_K`, aligned with `complement`.
    offset: Vec<f64>,
    /// Propagation block `C*_{Kbar,Kbar}`.
    inner: TropicalMatrix,
    /// Constraint block `C*_{K,K}`.
    within: TropicalMatrix,
    /// Constraint block `C*_{K,Kbar}`.
    cross: TropicalMatrix,
}

impl ConditionalRepresentation {
    pub fn event(&self) -> &ConditioningEvent {
        &self.event
    }

    pub fn complement(&self) -> &[usize] {
        &self.complement
    }

    /// Fixed part contributed by the conditioned coordinates.
    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// `C*` restricted to complement rows and columns.
    pub fn inner(&self) -> &TropicalMatrix {
        &self.inner
    }

    /// `C*` restricted to conditioned rows and columns.
    pub fn within(&self) -> &TropicalMatrix {
        &self.within
    }

    /// `C*` on conditioned rows, complement columns.
    pub fn cross(&self) -> &TropicalMatrix {
        &self.cross
    }

    /// Evaluates the complement coordinates for one free-factor vector:
    /// `offset v (inner (x) free)`, with `free` aligned to `complement`.
    pub fn apply(&self, free: &[f64]) -> Vec<f64> {
        assert_eq!(
            free.len(),
            self.complement.len(),
            "free factor vector must match the complement"
        );
        self.complement
            .iter()
            .enumerate()
            .map(|(row, _)| {
                let propagated = (0..free.len())
                    .map(|col| self.inner.get(row, col) * free[col])
                    .fold(0.0f64, f64::max);
                self.offset[row].max(propagated)
            })
            .collect()
    }
}

/// Extracts the conditional block form of `net` at `event`. Pure selection
/// from the cached Kleene star plus the offset products; conditioning on
/// every node leaves an empty (trivial) complement, and an empty event
/// returns the unconditional form (`offset` all zero, `inner` the full
/// star).
pub fn conditional_representation(
    net: &MaxLinearNetwork,
    event: &ConditioningEvent,
) -> Result<ConditionalRepresentation, RepresentationError> {
    let d = net.node_count();
    if let Some(&node) = event.nodes().iter().find(|&&n| n >= d) {
        return Err(RepresentationError::NodeOutOfRange { node, d });
    }
    let star = net.star();
    let conditioned = event.nodes();
    let complement = event.complement(d);

    let offset: Vec<f64> = complement
        .iter()
        .map(|&i| {
            conditioned
                .iter()
                .zip(event.values())
                .map(|(&k, &x_k)| star.get(i, k) * x_k)
                .fold(0.0f64, f64::max)
        })
        .collect();
    let inner = select(star, &complement, &complement);
    let within = select(star, conditioned, conditioned);
    let cross = select(star, conditioned, &complement);

    Ok(ConditionalRepresentation {
        event: event.clone(),
        complement,
        offset,
        inner,
        within,
        cross,
    })
}

/// Submatrix of `m` at the given row and column index lists.
fn select(m: &TropicalMatrix, rows: &[usize], cols: &[usize]) -> TropicalMatrix {
    let mut out = TropicalMatrix::zeros(rows.len(), cols.len());
    for (r, &i) in rows.iter().enumerate() {
        for (c, &j) in cols.iter().enumerate() {
            out.set(r, c, m.get(i, j)).expect("star entries are finite");
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Feasibility
// ---------------------------------------------------------------------------

/// Outcome of the event-feasibility check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Feasibility {
    /// The event is attainable; `witness` is the greatest factor vector
    /// reproducing `x_K` on the conditioned rows. Factors feeding no
    /// conditioned row are unconstrained and reported as 0.
    Feasible { witness: Vec<f64> },
    /// `node` is the first conditioned coordinate no factor can attain
    /// without overshooting another conditioned coordinate.
    Infeasible { node: usize },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible { .. })
    }
}

/// Checks whether some nonnegative factor vector reproduces `x_K` on the
/// conditioned rows of the Kleene star (tropical residuation): the
/// principal candidate `z_j = min_k x_k / C*_{kj}` is the greatest vector
/// staying below the event, and the event is feasible exactly when this
/// candidate attains every conditioned row. An empty event is trivially
/// feasible.
pub fn event_feasible(
    net: &MaxLinearNetwork,
    event: &ConditioningEvent,
) -> Result<Feasibility, RepresentationError> {
    let d = net.node_count();
    if let Some(&node) = event.nodes().iter().find(|&&n| n >= d) {
        return Err(RepresentationError::NodeOutOfRange { node, d });
    }
    let star = net.star();

    let witness = crate::scenarios::factor_bounds(star, event);
    for (idx, &k) in event.nodes().iter().enumerate() {
        let x_k = event.values()[idx];
        let attained = (0..d).any(|j| {
            let c = star.get(k, j);
            c > 0.0 && Some(x_k / c) == witness[j]
        });
        if !attained {
            return Ok(Feasibility::Infeasible { node: k });
        }
    }
    Ok(Feasibility::Feasible {
        witness: witness.into_iter().map(|w| w.unwrap_or(0.0)).collect(),
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{random_network, NetworkShape};
    use crate::innovations::Innovation;
    use crate::rng::{stream, stream_rng};
    use crate::sampler::sample_conditional;
    use crate::scenarios::{enumerate_scenarios, ScenarioError};
    use crate::stats::ks_distance;
    use crate::tolerance::rel_close;
    use rand::Rng;

    /// Chain 0 -> 1 -> 2 with edge weights 2 and 3.
    fn chain() -> MaxLinearNetwork {
        let coeff = TropicalMatrix::from_rows(&[
            vec![0.0, 0.0, 0.0],
            vec![2.0, 0.0, 0.0],
            vec![0.0, 3.0, 0.0],
        ])
        .unwrap();
        MaxLinearNetwork::from_coeff(coeff, vec![Innovation::unit_frechet(); 3]).unwrap()
    }

    #[test]
    fn chain_blocks_match_hand_extraction() {
        let net = chain();
        let event = ConditioningEvent::new(&[(1, 4.0)], 3).unwrap();
        let rep = conditional_representation(&net, &event).unwrap();
        assert_eq!(rep.complement(), &[0, 2]);
        assert_eq!(rep.offset(), &[0.0, 12.0]);
        let inner = TropicalMatrix::from_rows(&[vec![1.0, 0.0], vec![6.0, 1.0]]).unwrap();
        assert_eq!(rep.inner(), &inner);
        let within = TropicalMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert_eq!(rep.within(), &within);
        let cross = TropicalMatrix::from_rows(&[vec![2.0, 0.0]]).unwrap();
        assert_eq!(rep.cross(), &cross);
        // The downstream coordinate is the fixed 12 unless its own
        // innovation exceeds it.
        assert_eq!(rep.apply(&[1.0, 5.0]), vec![1.0, 12.0]);
        assert_eq!(rep.apply(&[1.0, 20.0]), vec![1.0, 20.0]);
    }

    #[test]
    fn empty_event_gives_the_unconditional_form() {
        let net = chain();
        let event = ConditioningEvent::new(&[], 3).unwrap();
        let rep = conditional_representation(&net, &event).unwrap();
        assert_eq!(rep.complement(), &[0, 1, 2]);
        assert_eq!(rep.offset(), &[0.0, 0.0, 0.0]);
        assert_eq!(rep.inner(), net.star());
        assert_eq!(rep.within().rows(), 0);
        assert_eq!(rep.cross().rows(), 0);
    }

    #[test]
    fn conditioning_every_node_leaves_a_trivial_complement() {
        let net = chain();
        let event = ConditioningEvent::new(&[(0, 1.0), (1, 4.0), (2, 12.0)], 3).unwrap();
        let rep = conditional_representation(&net, &event).unwrap();
        assert!(rep.complement().is_empty());
        assert!(rep.offset().is_empty());
        assert_eq!(rep.inner().rows(), 0);
        assert_eq!(rep.within(), net.star());
        assert_eq!(rep.apply(&[]), Vec::<f64>::new());
    }

    #[test]
    fn offset_is_positive_only_below_conditioned_ancestors() {
        // Disconnected pair: conditioning node 0 leaves node 1's offset 0.
        let coeff = TropicalMatrix::zeros(2, 2);
        let net =
            MaxLinearNetwork::from_coeff(coeff, vec![Innovation::unit_frechet(); 2]).unwrap();
        let event = ConditioningEvent::new(&[(0, 7.0)], 2).unwrap();
        let rep = conditional_representation(&net, &event).unwrap();
        assert_eq!(rep.complement(), &[1]);
        assert_eq!(rep.offset(), &[0.0]);
        // And in general: positive offset exactly where the star connects.
        let net = chain();
        let event = ConditioningEvent::new(&[(1, 4.0)], 3).unwrap();
        let rep = conditional_representation(&net, &event).unwrap();
        for (pos, &i) in rep.complement().iter().enumerate() {
            let connected = event.nodes().iter().any(|&k| net.star().get(i, k) > 0.0);
            assert_eq!(rep.offset()[pos] > 0.0, connected, "coordinate {i}");
        }
    }

    #[test]
    fn out_of_range_node_is_rejected() {
        let net = chain();
        let event = ConditioningEvent::new(&[(7, 1.0)], 9).unwrap();
        assert_eq!(
            conditional_representation(&net, &event).unwrap_err(),
            RepresentationError::NodeOutOfRange { node: 7, d: 3 }
        );
        assert_eq!(
            event_feasible(&net, &event).unwrap_err(),
            RepresentationError::NodeOutOfRange { node: 7, d: 3 }
        );
    }

    // ---- feasibility ------------------------------------------------------

    #[test]
    fn chain_pair_event_feasibility_and_witness() {
        let net = chain();
        // x = (4, 12) on nodes (1, 2): attainable, greatest witness
        // (2, 4, 12).
        let event = ConditioningEvent::new(&[(1, 4.0), (2, 12.0)], 3).unwrap();
        match event_feasible(&net, &event).unwrap() {
            Feasibility::Feasible { witness } => assert_eq!(witness, vec![2.0, 4.0, 12.0]),
            other => panic!("expected feasible, got {other:?}"),
        }
        // x = (4, 1): node 2 must be at least 3 * 4 = 12.
        let event = ConditioningEvent::new(&[(1, 4.0), (2, 1.0)], 3).unwrap();
        assert_eq!(
            event_feasible(&net, &event).unwrap(),
            Feasibility::Infeasible { node: 1 }
        );
    }

    #[test]
    fn singleton_events_are_always_feasible() {
        let net = chain();
        for node in 0..3 {
            for &x in &[0.1, 1.0, 42.0] {
                let event = ConditioningEvent::new(&[(node, x)], 3).unwrap();
                assert!(event_feasible(&net, &event).unwrap().is_feasible());
            }
        }
    }

    #[test]
    fn empty_event_is_trivially_feasible() {
        let net = chain();
        let event = ConditioningEvent::new(&[], 3).unwrap();
        assert!(event_feasible(&net, &event).unwrap().is_feasible());
    }

    #[test]
    fn witness_reproduces_the_event_on_conditioned_rows() {
        let mut outer = stream_rng(502, stream::AUX, 3);
        for trial in 0..30 {
            let d = outer.gen_range(2..6usize);
            let net = random_network(d, NetworkShape::Dag { density: 0.6 }, (0.3, 2.0), 900 + trial)
                .unwrap();
            // Condition at an unconditional draw: always feasible.
            let z: Vec<f64> = (0..d)
                .map(|_| Innovation::unit_frechet().sample(&mut outer))
                .collect();
            let x: Vec<f64> = (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| net.star().get(i, j) * z[j])
                        .fold(0.0f64, f64::max)
                })
                .collect();
            let k_len = outer.gen_range(1..=d);
            let pairs: Vec<(usize, f64)> = (0..k_len).map(|k| (k, x[k])).collect();
            let event = ConditioningEvent::new(&pairs, d).unwrap();
            match event_feasible(&net, &event).unwrap() {
                Feasibility::Feasible { witness } => {
                    for (&k, &x_k) in event.nodes().iter().zip(event.values()) {
                        let row = (0..d)
                            .map(|j| net.star().get(k, j) * witness[j])
                            .fold(0.0f64, f64::max);
                        assert!(rel_close(row, x_k, 1e-12), "row {k}: {row} vs {x_k}");
                    }
                }
                other => panic!("event at an actual draw must be feasible, got {other:?}"),
            }
        }
    }

    #[test]
    fn feasibility_agrees_with_scenario_enumeration() {
        let mut outer = stream_rng(503, stream::AUX, 4);
        let mut infeasible_seen = 0;
        for trial in 0..40 {
            let d = outer.gen_range(2..5usize);
            let net =
                random_network(d, NetworkShape::Dag { density: 0.5 }, (0.3, 2.0), 950 + trial)
                    .unwrap();
            let k_len = outer.gen_range(1..=d.min(3));
            let pairs: Vec<(usize, f64)> =
                (0..k_len).map(|k| (k, outer.gen::<f64>() * 4.0 + 0.5)).collect();
            let event = ConditioningEvent::new(&pairs, d).unwrap();
            let feasible = event_feasible(&net, &event).unwrap().is_feasible();
            let enumerated =
                enumerate_scenarios(net.star(), &event, net.innovations());
            match enumerated {
                Ok(_) => assert!(feasible, "enumeration found scenarios on infeasible event"),
                Err(ScenarioError::Infeasible { .. }) => {
                    assert!(!feasible, "feasible event failed to enumerate");
                    infeasible_seen += 1;
                }
                Err(other) => panic!("unexpected error {other}"),
            }
        }
        assert!(infeasible_seen > 0, "no infeasible instances exercised");
    }

    #[test]
    fn fixed_point_violations_are_always_infeasible() {
        // Necessary condition: x_k >= C*_{kk'} x_k' for conditioned pairs.
        let mut outer = stream_rng(504, stream::AUX, 5);
        let mut violated = 0;
        for trial in 0..60 {
            let d = outer.gen_range(2..6usize);
            let net = random_network(d, NetworkShape::Tree, (0.4, 2.5), 1000 + trial).unwrap();
            let k_len = outer.gen_range(2..=d);
            let pairs: Vec<(usize, f64)> =
                (0..k_len).map(|k| (k, outer.gen::<f64>() * 4.0 + 0.2)).collect();
            let event = ConditioningEvent::new(&pairs, d).unwrap();
            let breaks_fixed_point = event.nodes().iter().enumerate().any(|(ik, &k)| {
                event.nodes().iter().enumerate().any(|(ik2, &k2)| {
                    net.star().get(k, k2) * event.values()[ik2] > event.values()[ik]
                })
            });
            if breaks_fixed_point {
                violated += 1;
                assert!(
                    !event_feasible(&net, &event).unwrap().is_feasible(),
                    "fixed-point violation must be infeasible"
                );
            }
        }
        assert!(violated > 5, "too few violating instances: {violated}");
    }

    // ---- fidelity ---------------------------------------------------------

    #[test]
    fn formula_reproduces_the_conditional_sampler() {
        // Push the sampler's own free factors through the block formula:
        // the complement coordinates must match draw for draw, and the
        // marginals must agree (atoms snapped to a relative grid so
        // ulp-level rounding cannot split them).
        let snap = |v: f64| if v == 0.0 { f64::MIN } else { (v.ln() * 1e9).round() };
        for (trial, shape) in [
            NetworkShape::Tree,
            NetworkShape::Dag { density: 0.5 },
            NetworkShape::Dag { density: 0.9 },
        ]
        .into_iter()
        .enumerate()
        {
            let d = 3 + trial; // 3, 4, 5
            let net = random_network(d, shape, (0.4, 2.0), 1100 + trial as u64).unwrap();
            let mut ev_rng = stream_rng(505, stream::AUX, trial as u64);
            let node = ev_rng.gen_range(0..d);
            let event =
                ConditioningEvent::new(&[(node, ev_rng.gen::<f64>() * 3.0 + 1.0)], d).unwrap();
            let rep = conditional_representation(&net, &event).unwrap();
            let m = 10_000;
            let draws =
                sample_conditional(net.star(), &event, net.innovations(), m, 1200 + trial as u64)
                    .unwrap();
            let mut direct: Vec<Vec<f64>> = vec![Vec::with_capacity(m); rep.complement().len()];
            let mut formula: Vec<Vec<f64>> = vec![Vec::with_capacity(m); rep.complement().len()];
            for draw in &draws {
                let free: Vec<f64> = rep
                    .complement()
                    .iter()
                    .map(|&j| draw.factors[j])
                    .collect();
                let through = rep.apply(&free);
                for (pos, &i) in rep.complement().iter().enumerate() {
                    assert!(
                        rel_close(through[pos], draw.values[i], 1e-9),
                        "coordinate {i}: formula {} vs direct {}",
                        through[pos],
                        draw.values[i]
                    );
                    direct[pos].push(snap(draw.values[i]));
                    formula[pos].push(snap(through[pos]));
                }
            }
            for pos in 0..rep.complement().len() {
                let ks = ks_distance(&direct[pos], &formula[pos]);
                assert!(ks <= 0.02, "complement position {pos}: KS {ks}");
            }
        }
    }
}
