//! Toolkit for max-linear models over the tropical (max-times) semiring.
//!
//! A max-linear model expresses each coordinate of a random vector as the
//! maximum of weighted innovations, `X_i = max_j C_ij * Z_j`, written
//! tropically as `X = C (*) Z` where `(+)` is `max` and `(x)` is ordinary
//! multiplication on nonnegative reals. On a directed acyclic graph the
//! recursive form `X = C (*) X v Z` collapses, via the Kleene star `C*`, to
//! the explicit form `X = C* (*) Z`, and the geometry of the tropical cone
//! spanned by the columns of `C*` drives everything this crate does:
//!
//! * [`tropical`] — dense max-times matrices, tropical products, Kleene
//!   star, fixed-point checks, and cone membership by residuation.
//! * [`dag`] — directed acyclic graphs with ancestor/descendant closures.
//! * [`innovations`], [`model`] — innovation distributions and the two
//!   model flavours (recursive network on a DAG, flat factor model).
//! * [`simulate`], [`generate`], [`law`] — exact simulation with optional
//!   multiplicative noise and missingness, random model generation, exact
//!   joint CDFs and tail-dependence sums.
//! * [`scores`], [`arborescence`], [`learn`] — concentration-based edge
//!   scores from extreme observations, a deterministic Chu-Liu/Edmonds
//!   solver, and end-to-end latent-tree recovery plus evaluation.
//! * [`scenarios`], [`sampler`] — exact conditional sampling given observed
//!   coordinates, by enumerating which innovation "hits" each observation,
//!   with a rejection-based cross-check.
//! * [`representation`], [`citest`] — conditional max-linear representation
//!   blocks, event feasibility, and a Monte-Carlo conditional-independence
//!   test with permutation p-values.
//! * [`io`], [`bench`] — file formats (matrix text, edge lists, CSV
//!   observation tables, model JSON, DOT export) and a reproducible
//!   benchmark harness.
//!
//! All randomized entry points take explicit seeds and derive per-row or
//! per-draw counter-based streams ([`rng`]), so outputs are bit-reproducible
//! and independent of evaluation order. Comparisons use the relative
//! tolerance policy in [`tolerance`].

/// Crate version, for embedding in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod arborescence;
pub mod bench;
pub mod citest;
pub mod dag;
pub mod generate;
pub mod innovations;
pub mod io;
pub mod law;
pub mod learn;
pub mod model;
pub mod representation;
pub mod rng;
pub mod sampler;
pub mod scenarios;
pub mod scores;
pub mod simulate;
pub mod stats;
pub mod tolerance;
pub mod tropical;
