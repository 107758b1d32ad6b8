//! Shared plumbing: exit-code classification, 1-based reformatting of
//! library errors, flag-value parsers, config-file merging, and run
//! manifests.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use tropex_core::arborescence::ArborescenceError;
use tropex_core::citest::CiError;
use tropex_core::io::{write_atomic, IoError};
use tropex_core::learn::LearnError;
use tropex_core::representation::RepresentationError;
use tropex_core::sampler::SamplerError;
use tropex_core::scenarios::ScenarioError;
use tropex_core::scores::ScoreError;

// ---------------------------------------------------------------------------
// Failures and exit codes
// ---------------------------------------------------------------------------

/// A run failure, classified by exit code: 2 validation, 3 infeasible
/// conditioning event, 4 I/O.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Infeasible(String),
    Io(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Infeasible(m) | Failure::Io(m) => m,
        }
    }
}

pub fn validation(e: impl std::fmt::Display) -> Failure {
    Failure::Validation(e.to_string())
}

/// Transport-level problems (unreadable files, malformed JSON/CSV syntax)
/// exit 4; semantic problems with file contents exit 2.
impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match &e {
            IoError::File { .. } | IoError::Json { .. } | IoError::Csv(_) => {
                Failure::Io(e.to_string())
            }
            _ => Failure::Validation(e.to_string()),
        }
    }
}

/// Library errors carry 0-based node indices; the command line speaks
/// 1-based, so index-bearing variants are re-rendered here.
pub fn scenario_failure(e: ScenarioError) -> Failure {
    match e {
        ScenarioError::Infeasible { node, value } => Failure::Infeasible(format!(
            "conditioning event is infeasible: node {} cannot equal {}",
            node + 1,
            value
        )),
        ScenarioError::ZeroProbabilityEvent => {
            Failure::Infeasible("conditioning event has zero probability".to_string())
        }
        ScenarioError::NodeOutOfRange { node, d } => Failure::Validation(format!(
            "node {} is outside the model's 1..={} range",
            node + 1,
            d
        )),
        ScenarioError::DuplicateNode { node } => Failure::Validation(format!(
            "node {} appears more than once in the condition",
            node + 1
        )),
        ScenarioError::BadValue { node, value } => Failure::Validation(format!(
            "node {} has an unusable conditioning value {}",
            node + 1,
            value
        )),
        other => Failure::Validation(other.to_string()),
    }
}

pub fn sampler_failure(e: SamplerError) -> Failure {
    match e {
        SamplerError::Scenario(inner) => scenario_failure(inner),
        other => Failure::Validation(other.to_string()),
    }
}

pub fn representation_failure(e: RepresentationError) -> Failure {
    match e {
        RepresentationError::NodeOutOfRange { node, d } => Failure::Validation(format!(
            "node {} is outside the model's 1..={} range",
            node + 1,
            d
        )),
    }
}

pub fn ci_failure(e: CiError) -> Failure {
    match e {
        CiError::Sampler(inner) => sampler_failure(inner),
        CiError::Representation(inner) => representation_failure(inner),
        CiError::OverlappingBlocks { node } => Failure::Validation(format!(
            "node {} appears in more than one of the I, J, K blocks",
            node + 1
        )),
        CiError::NodeOutOfRange { node, d } => Failure::Validation(format!(
            "node {} is outside the model's 1..={} range",
            node + 1,
            d
        )),
        other => Failure::Validation(other.to_string()),
    }
}

pub fn learn_failure(e: LearnError) -> Failure {
    match e {
        LearnError::Score(ScoreError::NonPositiveValue { row, col, value }) => {
            Failure::Validation(format!(
                "nonpositive value {} at data row {}, node {}: log-domain scoring \
                 needs strictly positive observations (review any log transform \
                 or filter out base-flow rows)",
                value,
                row + 1,
                col + 1
            ))
        }
        LearnError::Arborescence(ArborescenceError::RootOutOfRange { root, d }) => {
            Failure::Validation(format!(
                "root {} is outside the 1..={} node range",
                root + 1,
                d
            ))
        }
        LearnError::Arborescence(ArborescenceError::NoArborescence { root, unreachable }) => {
            let nodes: Vec<String> = unreachable.iter().map(|v| (v + 1).to_string()).collect();
            Failure::Validation(format!(
                "no spanning tree exists: nodes {} are unreachable from root {} \
                 over usable score entries (too much missing data for the \
                 support threshold?)",
                nodes.join(", "),
                root + 1
            ))
        }
        other => Failure::Validation(other.to_string()),
    }
}

// ---------------------------------------------------------------------------
// Flag-value parsers (1-based on the surface, 0-based inside)
// ---------------------------------------------------------------------------

/// Parses `"3=4.0,5=2.5"` into 0-based `(node, value)` pairs.
pub fn parse_condition(text: &str) -> Result<Vec<(usize, f64)>, Failure> {
    let mut pairs = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (node_text, value_text) = part.split_once('=').ok_or_else(|| {
            Failure::Validation(format!(
                "condition entry {part:?} must look like node=value, e.g. 3=4.0"
            ))
        })?;
        let node: usize = node_text.trim().parse().map_err(|_| {
            Failure::Validation(format!("condition entry {part:?}: bad node index"))
        })?;
        if node == 0 {
            return Err(Failure::Validation(
                "node indices are 1-based; 0 is not a node".to_string(),
            ));
        }
        let value: f64 = value_text.trim().parse().map_err(|_| {
            Failure::Validation(format!("condition entry {part:?}: bad value"))
        })?;
        pairs.push((node - 1, value));
    }
    Ok(pairs)
}

/// Parses `"1,4"` into 0-based node indices.
pub fn parse_block(text: &str) -> Result<Vec<usize>, Failure> {
    let mut nodes = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let node: usize = part
            .parse()
            .map_err(|_| Failure::Validation(format!("bad node index {part:?}")))?;
        if node == 0 {
            return Err(Failure::Validation(
                "node indices are 1-based; 0 is not a node".to_string(),
            ));
        }
        nodes.push(node - 1);
    }
    if nodes.is_empty() {
        return Err(Failure::Validation(format!(
            "block {text:?} names no nodes"
        )));
    }
    Ok(nodes)
}

/// Parses `"1,2,6"` into a coordinate vector.
pub fn parse_point(text: &str) -> Result<Vec<f64>, Failure> {
    let mut values = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let v: f64 = part
            .parse()
            .map_err(|_| Failure::Validation(format!("bad coordinate {part:?}")))?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(Failure::Validation("point names no coordinates".to_string()));
    }
    Ok(values)
}

// ---------------------------------------------------------------------------
// Config-file merging
// ---------------------------------------------------------------------------

/// Applies `--config FILE` defaults: for each scalar under the invoked
/// subcommand's key that is not already present on the command line, a
/// `--flag value` pair is appended, so explicit flags always win.
pub fn merge_config_args(argv: Vec<String>) -> Result<Vec<String>, Failure> {
    let mut config_path: Option<String> = None;
    let mut i = 1;
    while i < argv.len() {
        if argv[i] == "--config" {
            config_path = argv.get(i + 1).cloned();
            i += 2;
            continue;
        }
        if let Some(rest) = argv[i].strip_prefix("--config=") {
            config_path = Some(rest.to_string());
        }
        i += 1;
    }
    let Some(path) = config_path else {
        return Ok(argv);
    };

    // The subcommand is the first non-flag token (only --config may
    // precede it, and its value was consumed above).
    let mut sub: Option<String> = None;
    let mut i = 1;
    while i < argv.len() {
        if argv[i] == "--config" {
            i += 2;
            continue;
        }
        if argv[i].starts_with('-') {
            i += 1;
            continue;
        }
        sub = Some(argv[i].clone());
        break;
    }
    let Some(sub) = sub else {
        return Ok(argv); // no subcommand; let the parser report it
    };

    let text = fs::read_to_string(&path)
        .map_err(|e| Failure::Io(format!("cannot read config {path}: {e}")))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Io(format!("config {path} is not valid JSON: {e}")))?;
    let Some(map) = value.as_object() else {
        return Err(Failure::Validation(format!(
            "config {path} must be a JSON object keyed by subcommand"
        )));
    };
    let section = match map.get(&sub) {
        None => return Ok(argv),
        Some(Value::Object(o)) => o,
        Some(_) => {
            return Err(Failure::Validation(format!(
                "config entry {sub:?} must be an object of flag values"
            )))
        }
    };

    let mut merged = argv.clone();
    for (key, val) in section {
        let flag = format!("--{key}");
        let assigned = format!("{flag}=");
        if argv.iter().any(|a| *a == flag || a.starts_with(&assigned)) {
            continue;
        }
        match val {
            Value::Bool(true) => merged.push(flag),
            Value::Bool(false) => {}
            Value::Number(n) => {
                merged.push(flag);
                merged.push(n.to_string());
            }
            Value::String(s) => {
                merged.push(flag);
                merged.push(s.clone());
            }
            other => {
                return Err(Failure::Validation(format!(
                    "config key {key:?} must be a scalar, got {other}"
                )))
            }
        }
    }
    Ok(merged)
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

/// Builds the reproducibility manifest: resolved parameters, tool
/// versions, and output paths. Contains no timestamps, so reruns match
/// byte for byte.
pub fn manifest_value(subcommand: &str, parameters: Value, outputs: &[&Path]) -> Value {
    json!({
        "subcommand": subcommand,
        "parameters": parameters,
        "versions": {
            "tropex": env!("CARGO_PKG_VERSION"),
            "tropex-core": tropex_core::VERSION,
        },
        "outputs": outputs
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>(),
    })
}

/// `out.csv` → `out.csv.manifest.json`.
pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes the manifest next to the primary output file.
pub fn write_manifest(
    subcommand: &str,
    parameters: Value,
    outputs: &[&Path],
) -> Result<(), Failure> {
    let manifest = manifest_value(subcommand, parameters, outputs);
    let path = manifest_path(outputs[0]);
    let mut text = serde_json::to_string_pretty(&manifest)
        .expect("manifest serialization cannot fail");
    text.push('\n');
    write_atomic(&path, &text)?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn pretty(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON serialization cannot fail");
    text.push('\n');
    text
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
