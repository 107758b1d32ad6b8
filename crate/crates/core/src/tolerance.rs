//! Relative-tolerance comparison policy used across the crate.
//!
//! All numeric equality checks are relative: `a` and `b` are considered
//! equal when `|a - b| <= rel_tol * max(|a|, |b|, 1)`. The `max(..., 1)`
//! floor makes the check behave like an absolute tolerance near zero, which
//! is the right reading for nonnegative coefficient and value comparisons.

/// Default relative tolerance for equality checks.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

/// Returns true when `a` and `b` agree within the relative tolerance
/// `rel_tol` (see module docs for the exact rule).
///
/// Exact equality short-circuits, so identical infinities compare equal.
/// Any comparison involving NaN is false.
pub fn rel_close(a: f64, b: f64, rel_tol: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= rel_tol * a.abs().max(b.abs()).max(1.0)
}

/// Entrywise [`rel_close`] over two equal-length slices.
pub fn rel_close_all(a: &[f64], b: &[f64], rel_tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(&x, &y)| rel_close(x, y, rel_tol))
}
