//! Dense max-times (tropical) linear algebra.
//!
//! The semiring is (R>=0, (+) = max, (x) = ordinary product): additive
//! identity 0, multiplicative identity 1. Matrices are stored with their raw
//! nonnegative entries (row i = affected node, column j = source), but every
//! product kernel works in the log domain — the max-plus twin where a zero
//! entry becomes the sentinel `-inf` and products become sums — so that long
//! coefficient chains can neither overflow nor underflow mid-computation.
//! Raw entries are kept because CDF evaluation and file formats consume
//! them directly.
//!
//! The Kleene star `C* = I (+) C (+) C^2 (+) ... (+) C^(d-1)` (tropical
//! powers) exists exactly when the support digraph of `C` is acyclic, and
//! `C*[u][v] > 0` iff `v == u` or `v` is an ancestor of `u`. Membership of a
//! vector `x` in the tropical cone spanned by the columns of `C` is decided
//! by residuation: the greatest candidate solution is
//! `z_j = min over {i : C[i][j] > 0} of x_i / C[i][j]`,
//! and `x` lies in the cone iff `C (x) z` reproduces `x`.

use serde::{Deserialize, Serialize};

use crate::tolerance::rel_close;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Errors from tropical-matrix construction and kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TropicalError {
    /// An entry was negative, NaN, or infinite.
    #[error("entry at row {row}, column {col} is {value}; entries must be finite and nonnegative")]
    InvalidEntry { row: usize, col: usize, value: f64 },

    /// A vector entry was negative, NaN, or infinite.
    #[error("vector entry {index} is {value}; entries must be finite and nonnegative")]
    InvalidVectorEntry { index: usize, value: f64 },

    /// Inner dimensions of a product do not line up.
    #[error(
        "dimension mismatch: left operand is {left_rows}x{left_cols}, \
         right operand is {right_rows}x{right_cols}"
    )]
    DimensionMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    /// A matrix-vector operation got a vector of the wrong length.
    #[error("length mismatch: matrix has {expected} columns/rows but vector has {got} entries")]
    LengthMismatch { expected: usize, got: usize },

    /// The Kleene star or a DAG-backed operation needs a square matrix.
    #[error("matrix is {rows}x{cols} but this operation needs a square matrix")]
    NotSquare { rows: usize, cols: usize },

    /// The support digraph contains a directed cycle, so no Kleene star
    /// exists. The cycle lists node indices in walk order.
    #[error("coefficient support contains a cycle: {}", format_cycle(cycle))]
    CyclicSupport { cycle: Vec<usize> },

    /// Flat constructor got the wrong number of entries.
    #[error("expected {expected} entries for a {rows}x{cols} matrix, got {got}")]
    BadEntryCount {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },
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

// ---------------------------------------------------------------------------
// Matrix type
// ---------------------------------------------------------------------------

/// Dense matrix over the max-times semiring; entries are finite and >= 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TropicalMatrix {
    rows: usize,
    cols: usize,
    /// Row-major raw entries.
    data: Vec<f64>,
}

impl TropicalMatrix {
    /// The additive-identity (all-zero) matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        TropicalMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// The multiplicative identity: ones on the diagonal, zeros elsewhere.
    pub fn identity(n: usize) -> Self {
        let mut m = TropicalMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from a row-major flat slice, validating every entry.
    pub fn from_flat(rows: usize, cols: usize, entries: &[f64]) -> Result<Self, TropicalError> {
        if entries.len() != rows * cols {
            return Err(TropicalError::BadEntryCount {
                rows,
                cols,
                expected: rows * cols,
                got: entries.len(),
            });
        }
        for (pos, &v) in entries.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(TropicalError::InvalidEntry {
                    row: pos / cols,
                    col: pos % cols,
                    value: v,
                });
            }
        }
        Ok(TropicalMatrix {
            rows,
            cols,
            data: entries.to_vec(),
        })
    }

    /// Builds a matrix from nested rows, validating shape and entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, TropicalError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(TropicalError::BadEntryCount {
                    rows: r,
                    cols: c,
                    expected: c,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(TropicalError::InvalidEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                data.push(v);
            }
        }
        Ok(TropicalMatrix { rows: r, cols: c, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Raw entry accessor; panics on out-of-range indices.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.rows && col < self.cols, "index out of range");
        self.data[row * self.cols + col]
    }

    /// Sets an entry after validating it; panics on out-of-range indices.
    pub fn set(&mut self, row: usize, col: usize, value: f64) -> Result<(), TropicalError> {
        assert!(row < self.rows && col < self.cols, "index out of range");
        if !(value.is_finite() && value >= 0.0) {
            return Err(TropicalError::InvalidEntry { row, col, value });
        }
        self.data[row * self.cols + col] = value;
        Ok(())
    }

    /// Row-major raw entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// One raw row as a slice.
    pub fn row(&self, row: usize) -> &[f64] {
        assert!(row < self.rows, "row out of range");
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// Positions of strictly positive entries, row-major order.
    pub fn support(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.cols;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(move |(pos, _)| (pos / cols, pos % cols))
    }

    /// Log-domain (max-plus) view of the entries: `log(e)` with `0 -> -inf`.
    ///
    /// The IEEE `-inf` is the dedicated sentinel for the tropical zero; it
    /// is produced only by this mapping, never by storing large negative
    /// floats. Zero and one round-trip exactly through [`from_log`]; general
    /// positive entries round-trip to within one unit in the last place.
    pub fn to_log(&self) -> Vec<f64> {
        self.data.iter().map(|&v| log_entry(v)).collect()
    }

    /// Rebuilds a matrix from a log-domain view (inverse of [`to_log`]).
    pub fn from_log(rows: usize, cols: usize, log_entries: &[f64]) -> Result<Self, TropicalError> {
        if log_entries.len() != rows * cols {
            return Err(TropicalError::BadEntryCount {
                rows,
                cols,
                expected: rows * cols,
                got: log_entries.len(),
            });
        }
        let data: Vec<f64> = log_entries.iter().map(|&l| exp_entry(l)).collect();
        for (pos, &v) in data.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(TropicalError::InvalidEntry {
                    row: pos / cols,
                    col: pos % cols,
                    value: v,
                });
            }
        }
        Ok(TropicalMatrix { rows, cols, data })
    }

    /// Selects a sub-matrix of the given rows x columns (indices may repeat).
    pub fn select(&self, row_idx: &[usize], col_idx: &[usize]) -> TropicalMatrix {
        let mut data = Vec::with_capacity(row_idx.len() * col_idx.len());
        for &i in row_idx {
            assert!(i < self.rows, "row index out of range");
            for &j in col_idx {
                assert!(j < self.cols, "column index out of range");
                data.push(self.data[i * self.cols + j]);
            }
        }
        TropicalMatrix {
            rows: row_idx.len(),
            cols: col_idx.len(),
            data,
        }
    }
}

/// Maps one raw entry to the log domain (`0 -> -inf`).
pub fn log_entry(value: f64) -> f64 {
    if value == 0.0 {
        f64::NEG_INFINITY
    } else {
        value.ln()
    }
}

/// Maps one log-domain value back to the raw domain (`-inf -> 0`).
pub fn exp_entry(log_value: f64) -> f64 {
    if log_value == f64::NEG_INFINITY {
        0.0
    } else {
        log_value.exp()
    }
}

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

fn validate_vector(v: &[f64]) -> Result<(), TropicalError> {
    for (index, &value) in v.iter().enumerate() {
        if !(value.is_finite() && value >= 0.0) {
            return Err(TropicalError::InvalidVectorEntry { index, value });
        }
    }
    Ok(())
}

/// Tropical matrix-vector product: `x_i = max_j C[i][j] * z_j`.
///
/// Computed in the log domain (sum of logs, max over columns) and mapped
/// back, so chains of small or large coefficients cannot overflow
/// intermediate results.
pub fn trop_matvec(c: &TropicalMatrix, z: &[f64]) -> Result<Vec<f64>, TropicalError> {
    if z.len() != c.cols {
        return Err(TropicalError::LengthMismatch {
            expected: c.cols,
            got: z.len(),
        });
    }
    validate_vector(z)?;
    let lz: Vec<f64> = z.iter().map(|&v| log_entry(v)).collect();
    let mut out = Vec::with_capacity(c.rows);
    for i in 0..c.rows {
        let row = &c.data[i * c.cols..(i + 1) * c.cols];
        let mut best = f64::NEG_INFINITY;
        for (j, &cij) in row.iter().enumerate() {
            if cij > 0.0 && lz[j] > f64::NEG_INFINITY {
                let cand = cij.ln() + lz[j];
                if cand > best {
                    best = cand;
                }
            }
        }
        out.push(exp_entry(best));
    }
    Ok(out)
}

/// Tropical matrix product: `(A (x) B)[i][k] = max_j A[i][j] * B[j][k]`.
pub fn trop_matmul(a: &TropicalMatrix, b: &TropicalMatrix) -> Result<TropicalMatrix, TropicalError> {
    if a.cols != b.rows {
        return Err(TropicalError::DimensionMismatch {
            left_rows: a.rows,
            left_cols: a.cols,
            right_rows: b.rows,
            right_cols: b.cols,
        });
    }
    let la = a.to_log();
    let lb = b.to_log();
    let mut out = vec![f64::NEG_INFINITY; a.rows * b.cols];
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = la[i * a.cols + j];
            if aij == f64::NEG_INFINITY {
                continue;
            }
            let brow = &lb[j * b.cols..(j + 1) * b.cols];
            let orow = &mut out[i * b.cols..(i + 1) * b.cols];
            for (k, &bjk) in brow.iter().enumerate() {
                if bjk > f64::NEG_INFINITY {
                    let cand = aij + bjk;
                    if cand > orow[k] {
                        orow[k] = cand;
                    }
                }
            }
        }
    }
    TropicalMatrix::from_log(a.rows, b.cols, &out)
}

/// Entrywise tropical sum (max) of two equal-shape matrices.
pub fn trop_add(a: &TropicalMatrix, b: &TropicalMatrix) -> Result<TropicalMatrix, TropicalError> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(TropicalError::DimensionMismatch {
            left_rows: a.rows,
            left_cols: a.cols,
            right_rows: b.rows,
            right_cols: b.cols,
        });
    }
    let data: Vec<f64> = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| x.max(y))
        .collect();
    Ok(TropicalMatrix {
        rows: a.rows,
        cols: a.cols,
        data,
    })
}

/// Finds a directed cycle in the support digraph (edge `col -> row` for each
/// positive entry), if any, returned in walk order.
fn support_cycle(c: &TropicalMatrix) -> Option<Vec<usize>> {
    let n = c.rows;
    // children[j] = rows i with C[i][j] > 0, i.e. edges j -> i.
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j) in c.support() {
        if i != j {
            children[j].push(i);
        } else {
            return Some(vec![i]); // positive diagonal = self-loop
        }
    }
    // Iterative DFS with colors; on back edge, unwind the stack for the cycle.
    const WHITE: u8 = 0;
    const GRAY: u8 = 1;
    const BLACK: u8 = 2;
    let mut color = vec![WHITE; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    for start in 0..n {
        if color[start] != WHITE {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        color[start] = GRAY;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if *next < children[node].len() {
                let child = children[node][*next];
                *next += 1;
                match color[child] {
                    WHITE => {
                        color[child] = GRAY;
                        parent[child] = Some(node);
                        stack.push((child, 0));
                    }
                    GRAY => {
                        // Back edge node -> child: cycle child -> ... -> node.
                        let mut cycle = vec![node];
                        let mut cur = node;
                        while cur != child {
                            cur = parent[cur].expect("gray node must have a parent");
                            cycle.push(cur);
                        }
                        cycle.reverse();
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                color[node] = BLACK;
                stack.pop();
            }
        }
    }
    None
}

/// Kleene star `C* = I (+) C (+) C^2 (+) ... (+) C^(d-1)`.
///
/// Errors with the offending cycle when the support digraph is cyclic.
/// The star is accumulated from repeated [`trop_matmul`] powers, so it
/// agrees bit-for-bit with a power-accumulation cross-check built from the
/// public product kernel.
pub fn kleene_star(c: &TropicalMatrix) -> Result<TropicalMatrix, TropicalError> {
    if c.rows != c.cols {
        return Err(TropicalError::NotSquare {
            rows: c.rows,
            cols: c.cols,
        });
    }
    if let Some(cycle) = support_cycle(c) {
        return Err(TropicalError::CyclicSupport { cycle });
    }
    let n = c.rows;
    let mut star = TropicalMatrix::identity(n);
    if n == 0 {
        return Ok(star);
    }
    let mut power = c.clone();
    for _ in 1..n {
        star = trop_add(&star, &power)?;
        power = trop_matmul(&power, c)?;
    }
    Ok(star)
}

/// Checks the fixed-point law `x == C* (x) x` within a relative tolerance.
///
/// A vector is a fixed point of the starred matrix exactly when it is a
/// realizable state of the recursive model, i.e. `x = C* (x) z` for some
/// innovation vector `z`.
pub fn is_fixed_point(cstar: &TropicalMatrix, x: &[f64], rel_tol: f64) -> Result<bool, TropicalError> {
    if cstar.rows != cstar.cols {
        return Err(TropicalError::NotSquare {
            rows: cstar.rows,
            cols: cstar.cols,
        });
    }
    let image = trop_matvec(cstar, x)?;
    Ok(image
        .iter()
        .zip(x)
        .all(|(&im, &xi)| rel_close(im, xi, rel_tol)))
}

// ---------------------------------------------------------------------------
// Cone membership by residuation
// ---------------------------------------------------------------------------

/// One coordinate of the greatest candidate solution of `C (x) z <= x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WitnessBound {
    /// The residuated minimum `min_i x_i / C[i][j]`.
    Finite(f64),
    /// The column of `C` is all zero, so no constraint binds `z_j`.
    Unbounded,
}

impl WitnessBound {
    /// Finite value, or `None` when unbounded.
    pub fn finite(self) -> Option<f64> {
        match self {
            WitnessBound::Finite(v) => Some(v),
            WitnessBound::Unbounded => None,
        }
    }
}

/// Result of a tropical cone-membership query.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeMembership {
    /// Whether `x` lies in the cone spanned by the columns of `C`.
    pub member: bool,
    /// Greatest candidate solution, one bound per column of `C`.
    pub witness: Vec<WitnessBound>,
}

/// Decides membership of `x` in the tropical cone of `C` by residuation.
///
/// The greatest candidate is `z_j = min over {i : C[i][j] > 0} x_i / C[i][j]`
/// (unbounded for all-zero columns, which contribute nothing to the
/// product). `x` is a member iff `C (x) z` reproduces `x` within `rel_tol`.
/// Any solution of `C (x) z = x` is dominated entrywise by the witness.
pub fn cone_membership(
    c: &TropicalMatrix,
    x: &[f64],
    rel_tol: f64,
) -> Result<ConeMembership, TropicalError> {
    if x.len() != c.rows {
        return Err(TropicalError::LengthMismatch {
            expected: c.rows,
            got: x.len(),
        });
    }
    validate_vector(x)?;
    let mut witness = Vec::with_capacity(c.cols);
    let mut z_for_check = vec![0.0; c.cols];
    for j in 0..c.cols {
        // Raw division: a single quotient cannot overflow the way chained
        // products can, and it keeps witness values exact (x_i / 1 == x_i).
        let mut bound = f64::INFINITY;
        let mut constrained = false;
        for i in 0..c.rows {
            let cij = c.data[i * c.cols + j];
            if cij > 0.0 {
                constrained = true;
                let cand = x[i] / cij;
                if cand < bound {
                    bound = cand;
                }
            }
        }
        if constrained {
            let value = if bound.is_finite() { bound } else { f64::MAX };
            z_for_check[j] = value;
            witness.push(WitnessBound::Finite(value));
        } else {
            // Unconstrained columns multiply an all-zero column, so their
            // value never reaches the product; 0 is used in the check.
            witness.push(WitnessBound::Unbounded);
        }
    }
    let image = trop_matvec(c, &z_for_check)?;
    let member = image
        .iter()
        .zip(x)
        .all(|(&im, &xi)| rel_close(im, xi, rel_tol));
    Ok(ConeMembership { member, witness })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
