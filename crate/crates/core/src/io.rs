//! File formats: observation CSV, ground-truth edge lists, model and tree
//! JSON, DOT export with truth coloring, and atomic writes.
//!
//! Line numbers in errors are 1-based file lines (the header is line 1);
//! node indices inside JSON files are 1-based as well, because the files
//! are user-facing artifacts.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::arborescence::Arborescence;
use crate::dag::{Dag, DagError, Edge};
use crate::innovations::Innovation;
use crate::model::{MaxLinearNetwork, ModelError};
use crate::simulate::ObservationSet;
use crate::tropical::TropicalMatrix;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("i/o failure on {path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("{path}: invalid JSON: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("observation file needs a header row of column labels")]
    MissingHeader,

    #[error("column label {label:?} appears more than once")]
    DuplicateLabel { label: String },

    #[error("line {line}: expected {expected} cells, found {got}")]
    RaggedRow {
        line: usize,
        expected: usize,
        got: usize,
    },

    #[error("line {line}, column {label:?}: cannot parse {text:?} as a number")]
    BadNumber {
        line: usize,
        label: String,
        text: String,
    },

    #[error(
        "line {line}, column {label:?}: value {value} must be positive under the log transform"
    )]
    NonPositiveUnderLog {
        line: usize,
        label: String,
        value: f64,
    },

    #[error("line {line}: expected 'parent child', found {found:?}")]
    BadEdgeLine { line: usize, found: String },

    #[error("line {line}: {token:?} is neither a known label nor a 1-based node index")]
    UnknownNode { line: usize, token: String },

    #[error("model file: {detail}")]
    BadModel { detail: String },

    #[error("tree file: {detail}")]
    BadTree { detail: String },

    #[error("{labels} labels for {nodes} nodes")]
    LabelCount { labels: usize, nodes: usize },

    #[error(transparent)]
    Dag(#[from] DagError),

    #[error(transparent)]
    Model(#[from] ModelError),
}

fn file_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::File {
        path: path.display().to_string(),
        source,
    }
}

// ---------------------------------------------------------------------------
// Atomic writes and JSON helpers
// ---------------------------------------------------------------------------

/// Writes `contents` to `path` atomically (temp file in the same
/// directory, then rename), so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| file_err(path, e))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| file_err(path, e))?;
    tmp.persist(path).map_err(|e| file_err(path, e.error))?;
    Ok(())
}

/// Pretty-prints `value` as JSON and writes it atomically.
pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| IoError::Json {
        path: path.display().to_string(),
        source: e,
    })?;
    text.push('\n');
    write_atomic(path, &text)
}

/// Reads and deserializes a JSON file.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| IoError::Json {
        path: path.display().to_string(),
        source: e,
    })
}

// ---------------------------------------------------------------------------
// Observation CSV
// ---------------------------------------------------------------------------

/// Reads an observation table: a header of unique column labels, then one
/// row per observation; empty cells mark missing values. With
/// `log_transform`, present values must be positive and are stored as
/// their natural log (the set is marked log-domain).
pub fn ingest_csv(path: &Path, log_transform: bool) -> Result<ObservationSet, IoError> {
    let file = fs::File::open(path).map_err(|e| file_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let labels: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.to_string())
        .collect();
    if labels.is_empty() || labels.iter().all(|l| l.is_empty()) {
        return Err(IoError::MissingHeader);
    }
    for (i, label) in labels.iter().enumerate() {
        if labels[..i].contains(label) {
            return Err(IoError::DuplicateLabel {
                label: label.clone(),
            });
        }
    }

    let d = labels.len();
    let mut values: Vec<f64> = Vec::new();
    let mut missing: Vec<bool> = Vec::new();
    let mut n_rows = 0usize;
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = row_idx + 2; // header is line 1
        if record.len() != d {
            return Err(IoError::RaggedRow {
                line,
                expected: d,
                got: record.len(),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                values.push(f64::NAN);
                missing.push(true);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| IoError::BadNumber {
                line,
                label: labels[col].clone(),
                text: cell.to_string(),
            })?;
            let stored = if log_transform {
                if v <= 0.0 {
                    return Err(IoError::NonPositiveUnderLog {
                        line,
                        label: labels[col].clone(),
                        value: v,
                    });
                }
                v.ln()
            } else {
                v
            };
            values.push(stored);
            missing.push(false);
        }
        n_rows += 1;
    }
    Ok(ObservationSet::new(
        labels,
        n_rows,
        values,
        missing,
        log_transform,
    ))
}

/// Writes an observation table as CSV: header of labels, empty cells for
/// missing values, shortest round-trip decimal for the rest. Values are
/// written as stored (log-domain sets export their logs).
pub fn export_csv(obs: &ObservationSet, path: &Path) -> Result<(), IoError> {
    let mut text = String::new();
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(obs.labels())?;
    for row in 0..obs.n_rows() {
        let record: Vec<String> = (0..obs.n_cols())
            .map(|col| match obs.value(row, col) {
                Some(v) => format!("{v}"),
                None => String::new(),
            })
            .collect();
        writer.write_record(&record)?;
    }
    let bytes = writer.into_inner().expect("in-memory writer cannot fail");
    text.push_str(&String::from_utf8(bytes).expect("CSV output is UTF-8"));
    write_atomic(path, &text)
}

// ---------------------------------------------------------------------------
// Edge lists (ground truth)
// ---------------------------------------------------------------------------

/// Parses a ground-truth edge list: one `parent child` pair per line
/// (an optional `->` between them is accepted), `#` comments and blank
/// lines skipped. Tokens are resolved as labels first, then as 1-based
/// node indices.
pub fn read_edge_list(path: &Path, labels: &[String]) -> Result<Vec<Edge>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let mut tokens: Vec<&str> = stripped.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() == 3 && tokens[1] == "->" {
            tokens.remove(1);
        }
        if tokens.len() != 2 {
            return Err(IoError::BadEdgeLine {
                line,
                found: stripped.trim().to_string(),
            });
        }
        let resolve = |token: &str| -> Result<usize, IoError> {
            if let Some(idx) = labels.iter().position(|l| l == token) {
                return Ok(idx);
            }
            match token.parse::<usize>() {
                Ok(n) if n >= 1 && n <= labels.len() => Ok(n - 1),
                _ => Err(IoError::UnknownNode {
                    line,
                    token: token.to_string(),
                }),
            }
        };
        edges.push(Edge::new(resolve(tokens[0])?, resolve(tokens[1])?));
    }
    Ok(edges)
}

/// Reads a ground-truth edge list and assembles the DAG over `labels`.
pub fn load_ground_truth(path: &Path, labels: &[String]) -> Result<Dag, IoError> {
    let edges = read_edge_list(path, labels)?;
    Ok(Dag::new(labels.len(), &edges)?)
}

// ---------------------------------------------------------------------------
// Model JSON
// ---------------------------------------------------------------------------

/// One weighted edge in a model file (1-based node indices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEdgeEntry {
    pub parent: usize,
    pub child: usize,
    pub coeff: f64,
}

/// On-disk form of a recursive max-linear network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub d: usize,
    pub edges: Vec<ModelEdgeEntry>,
    pub innovations: Vec<Innovation>,
}

impl ModelFile {
    pub fn from_network(net: &MaxLinearNetwork) -> Self {
        let mut edges: Vec<ModelEdgeEntry> = net
            .dag()
            .edges()
            .iter()
            .map(|e| ModelEdgeEntry {
                parent: e.parent + 1,
                child: e.child + 1,
                coeff: net.coeff().get(e.child, e.parent),
            })
            .collect();
        edges.sort_by_key(|e| (e.parent, e.child));
        ModelFile {
            d: net.node_count(),
            edges,
            innovations: net.innovations().to_vec(),
        }
    }

    pub fn into_network(self) -> Result<MaxLinearNetwork, IoError> {
        if self.d == 0 {
            return Err(IoError::BadModel {
                detail: "d must be at least 1".to_string(),
            });
        }
        let mut coeff = TropicalMatrix::zeros(self.d, self.d);
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.edges {
            if !seen.insert((e.parent, e.child)) {
                return Err(IoError::BadModel {
                    detail: format!("duplicate edge {} -> {}", e.parent, e.child),
                });
            }
            if e.parent < 1 || e.parent > self.d || e.child < 1 || e.child > self.d {
                return Err(IoError::BadModel {
                    detail: format!(
                        "edge {} -> {} outside the 1..={} node range",
                        e.parent, e.child, self.d
                    ),
                });
            }
            if !(e.coeff.is_finite() && e.coeff > 0.0) {
                return Err(IoError::BadModel {
                    detail: format!(
                        "edge {} -> {} needs a positive finite coefficient, got {}",
                        e.parent, e.child, e.coeff
                    ),
                });
            }
            coeff
                .set(e.child - 1, e.parent - 1, e.coeff)
                .expect("validated finite nonnegative");
        }
        if self.innovations.len() != self.d {
            return Err(IoError::BadModel {
                detail: format!(
                    "{} innovation entries for {} nodes",
                    self.innovations.len(),
                    self.d
                ),
            });
        }
        Ok(MaxLinearNetwork::from_coeff(coeff, self.innovations)?)
    }
}

pub fn save_model(net: &MaxLinearNetwork, path: &Path) -> Result<(), IoError> {
    save_json(&ModelFile::from_network(net), path)
}

pub fn load_model(path: &Path) -> Result<MaxLinearNetwork, IoError> {
    load_json::<ModelFile>(path)?.into_network()
}

// ---------------------------------------------------------------------------
// Tree JSON
// ---------------------------------------------------------------------------

/// One estimated edge in a tree file, by label; `coeff` is absent when the
/// scoring method does not estimate coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEdgeEntry {
    pub parent: String,
    pub child: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub coeff: Option<f64>,
}

/// On-disk form of an estimated rooted tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeFile {
    pub labels: Vec<String>,
    pub root: String,
    pub edges: Vec<TreeEdgeEntry>,
}

impl TreeFile {
    pub fn from_tree(labels: &[String], tree: &Arborescence) -> Result<Self, IoError> {
        if labels.len() != tree.node_count() {
            return Err(IoError::LabelCount {
                labels: labels.len(),
                nodes: tree.node_count(),
            });
        }
        let edges = tree
            .edges()
            .iter()
            .map(|e| TreeEdgeEntry {
                parent: labels[e.parent].clone(),
                child: labels[e.child].clone(),
                coeff: tree.coeff(e.child),
            })
            .collect();
        Ok(TreeFile {
            labels: labels.to_vec(),
            root: labels[tree.root()].clone(),
            edges,
        })
    }

    pub fn into_tree(self) -> Result<(Vec<String>, Arborescence), IoError> {
        let d = self.labels.len();
        if d == 0 {
            return Err(IoError::BadTree {
                detail: "labels must not be empty".to_string(),
            });
        }
        for (i, label) in self.labels.iter().enumerate() {
            if self.labels[..i].contains(label) {
                return Err(IoError::DuplicateLabel {
                    label: label.clone(),
                });
            }
        }
        let index_of = |label: &str| -> Result<usize, IoError> {
            self.labels
                .iter()
                .position(|l| l == label)
                .ok_or_else(|| IoError::BadTree {
                    detail: format!("unknown label {label:?}"),
                })
        };
        let root = index_of(&self.root)?;
        let mut parent: Vec<Option<usize>> = vec![None; d];
        let mut coeff: Vec<Option<f64>> = vec![None; d];
        for e in &self.edges {
            let p = index_of(&e.parent)?;
            let c = index_of(&e.child)?;
            if parent[c].is_some() {
                return Err(IoError::BadTree {
                    detail: format!("node {:?} has two parents", e.child),
                });
            }
            if c == root {
                return Err(IoError::BadTree {
                    detail: format!("root {:?} cannot have a parent", e.child),
                });
            }
            parent[c] = Some(p);
            coeff[c] = e.coeff;
        }
        for (v, p) in parent.iter().enumerate() {
            if v != root && p.is_none() {
                return Err(IoError::BadTree {
                    detail: format!("node {:?} has no parent", self.labels[v]),
                });
            }
        }
        // Walk each parent chain; re-seeing a node means a cycle.
        for start in 0..d {
            let mut hops = 0usize;
            let mut v = start;
            while let Some(p) = parent[v] {
                hops += 1;
                if hops > d {
                    return Err(IoError::BadTree {
                        detail: format!("cycle through node {:?}", self.labels[start]),
                    });
                }
                v = p;
            }
        }
        Ok((
            self.labels.clone(),
            Arborescence::from_parent_map(root, parent, coeff),
        ))
    }
}

pub fn save_tree(labels: &[String], tree: &Arborescence, path: &Path) -> Result<(), IoError> {
    save_json(&TreeFile::from_tree(labels, tree)?, path)
}

pub fn load_tree(path: &Path) -> Result<(Vec<String>, Arborescence), IoError> {
    load_json::<TreeFile>(path)?.into_tree()
}

// ---------------------------------------------------------------------------
// DOT export
// ---------------------------------------------------------------------------

/// Renders an estimated tree as Graphviz DOT. Without a truth DAG the
/// edges are plain; with one, estimate edges are colored blue (also in
/// truth), purple (truth has the reverse), or red (neither), and truth
/// edges absent from the estimate are added gray dashed. Node and edge
/// order is deterministic.
pub fn export_dot(
    labels: &[String],
    tree: &Arborescence,
    truth: Option<&Dag>,
) -> Result<String, IoError> {
    if labels.len() != tree.node_count() {
        return Err(IoError::LabelCount {
            labels: labels.len(),
            nodes: tree.node_count(),
        });
    }
    if let Some(t) = truth {
        if t.node_count() != tree.node_count() {
            return Err(IoError::LabelCount {
                labels: t.node_count(),
                nodes: tree.node_count(),
            });
        }
    }
    let quote = |s: &str| format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""));

    let mut out = String::from("digraph estimate {\n  rankdir=LR;\n");
    for label in labels {
        let _ = writeln!(out, "  {};", quote(label));
    }
    let estimate = tree.edges();
    for e in &estimate {
        let mut attrs: Vec<String> = Vec::new();
        if let Some(c) = tree.coeff(e.child) {
            attrs.push(format!("label=\"{c}\""));
        }
        if let Some(t) = truth {
            let color = if t.edges().contains(e) {
                "blue"
            } else if t.edges().contains(&Edge::new(e.child, e.parent)) {
                "purple"
            } else {
                "red"
            };
            attrs.push(format!("color={color}"));
        }
        let attr_text = if attrs.is_empty() {
            String::new()
        } else {
            format!(" [{}]", attrs.join(", "))
        };
        let _ = writeln!(
            out,
            "  {} -> {}{};",
            quote(&labels[e.parent]),
            quote(&labels[e.child]),
            attr_text
        );
    }
    if let Some(t) = truth {
        let mut missed: Vec<Edge> = t
            .edges()
            .iter()
            .filter(|e| !estimate.contains(e))
            .copied()
            .collect();
        missed.sort();
        for e in missed {
            let _ = writeln!(
                out,
                "  {} -> {} [color=gray, style=dashed];",
                quote(&labels[e.parent]),
                quote(&labels[e.child])
            );
        }
    }
    out.push_str("}\n");
    Ok(out)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
