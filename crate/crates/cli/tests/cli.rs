//! End-to-end tests of the command-line interface: pipelines over real
//! files, exit-code contract, config-file merging, and manifest output.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tropex(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tropex"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed (status {:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_json(path: &Path) -> Value {
    let text = fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()));
    serde_json::from_str(&text)
        .unwrap_or_else(|e| panic!("invalid JSON in {}: {e}", path.display()))
}

/// Writes a three-node chain model (1 -> 2 with weight 2, 2 -> 3 with
/// weight 3, unit Fréchet innovations) and returns its path.
fn write_chain_model(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("chain.json");
    let model = serde_json::json!({
        "d": 3,
        "edges": [
            { "parent": 1, "child": 2, "coeff": 2.0 },
            { "parent": 2, "child": 3, "coeff": 3.0 },
        ],
        "innovations": [
            { "dist": "frechet", "params": { "shape": 1.0, "scale": 1.0 } },
            { "dist": "frechet", "params": { "shape": 1.0, "scale": 1.0 } },
            { "dist": "frechet", "params": { "shape": 1.0, "scale": 1.0 } },
        ],
    });
    fs::write(&path, serde_json::to_string_pretty(&model).unwrap()).unwrap();
    path
}

// ---------------------------------------------------------------------------
// Pipelines
// ---------------------------------------------------------------------------

#[test]
fn simulate_learn_eval_pipeline_recovers_a_noise_free_tree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    assert_ok(&tropex(
        d,
        &[
            "simulate",
            "--gen-nodes",
            "8",
            "--n",
            "400",
            "--seed",
            "7",
            "--save-model",
            "model.json",
            "--out",
            "obs.csv",
        ],
    ));
    // Ground-truth edge list derived from the saved model (1-based pairs).
    let model = read_json(&d.join("model.json"));
    let mut lines = String::new();
    for e in model["edges"].as_array().unwrap() {
        lines.push_str(&format!("{} {}\n", e["parent"], e["child"]));
    }
    fs::write(d.join("truth.txt"), lines).unwrap();

    assert_ok(&tropex(
        d,
        &["learn", "--input", "obs.csv", "--out", "tree.json"],
    ));
    assert_ok(&tropex(
        d,
        &[
            "eval",
            "--estimate",
            "tree.json",
            "--truth",
            "truth.txt",
            "--dot",
            "graph.dot",
            "--out",
            "report.json",
        ],
    ));

    let report = read_json(&d.join("report.json"));
    assert_eq!(report["recall"], 1.0, "noise-free tree should be recovered");
    assert_eq!(report["precision"], 1.0);
    assert_eq!(report["truth_edge_count"], 7);
    let dot = fs::read_to_string(d.join("graph.dot")).unwrap();
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("->"));

    // Every file-producing step leaves a manifest next to its output.
    for (out, sub) in [
        ("obs.csv", "simulate"),
        ("tree.json", "learn"),
        ("report.json", "eval"),
    ] {
        let manifest = read_json(&d.join(format!("{out}.manifest.json")));
        assert_eq!(manifest["subcommand"], sub);
        assert!(manifest["parameters"].is_object());
        assert!(manifest["versions"]["tropex"].is_string());
        let outputs: Vec<&str> = manifest["outputs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_str().unwrap())
            .collect();
        assert!(outputs.contains(&out), "{out} missing from {outputs:?}");
    }
}

#[test]
fn sample_csv_pins_conditioned_coordinates_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_chain_model(d);

    assert_ok(&tropex(
        d,
        &[
            "sample",
            "--model",
            "chain.json",
            "--condition",
            "2=1.5",
            "--n",
            "50",
            "--seed",
            "3",
            "--out",
            "samples.csv",
        ],
    ));

    let text = fs::read_to_string(d.join("samples.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("scenario,X1,X2,X3"));
    let mut rows = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 4);
        let scenario: usize = fields[0].parse().expect("scenario id");
        assert!(scenario >= 1, "scenario ids are 1-based");
        assert_eq!(fields[2], "1.5", "conditioned coordinate must be exact");
        // Chain constraint: X2 >= 2 X1 and X3 >= 3 X2 hold in every draw.
        let x1: f64 = fields[1].parse().unwrap();
        let x3: f64 = fields[3].parse().unwrap();
        assert!(2.0 * x1 <= 1.5 + 1e-12);
        assert!(x3 >= 4.5 - 1e-12);
        rows += 1;
    }
    assert_eq!(rows, 50);
}

#[test]
fn cdf_reports_the_chain_value_with_embedded_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_chain_model(d);

    let out = tropex(d, &["cdf", "--model", "chain.json", "--point", "1,2,6"]);
    assert_ok(&out);
    let body: Value = serde_json::from_slice(&out.stdout).unwrap();
    let cdf = body["cdf"].as_f64().unwrap();
    assert!(
        (cdf - (-5.0f64 / 3.0).exp()).abs() < 1e-12,
        "chain CDF at (1,2,6) should be exp(-5/3), got {cdf}"
    );
    let td = body["tail_dependence"].as_f64().unwrap();
    let lower = body["tail_dependence_lower_bound"].as_f64().unwrap();
    assert!(lower <= td + 1e-12);
    assert_eq!(body["manifest"]["subcommand"], "cdf");
}

#[test]
fn ci_reports_a_permutation_p_value() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_chain_model(d);

    let out = tropex(
        d,
        &[
            "ci", "--model", "chain.json", "--i", "1", "--j", "3", "--k", "2=4.0", "--m", "300",
            "--perms", "499", "--seed", "5",
        ],
    );
    assert_ok(&out);
    let body: Value = serde_json::from_slice(&out.stdout).unwrap();
    let p = body["p_value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert!(body["statistic"].as_f64().unwrap() >= 0.0);
    assert_eq!(body["samples_used"], 300);
    assert_eq!(body["manifest"]["subcommand"], "ci");
}

#[test]
fn bench_writes_a_report_and_keeps_timings_out_of_it() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let out = tropex(
        d,
        &[
            "bench", "--trials", "3", "--d", "5", "--n", "120", "--seed", "11", "--out",
            "report.json",
        ],
    );
    assert_ok(&out);
    let report = read_json(&d.join("report.json"));
    assert_eq!(report["config"]["trials"], 3);
    assert_eq!(report["trials"].as_array().unwrap().len(), 3);
    assert!(report["recall"]["mean"].as_f64().unwrap() >= 0.0);
    assert!(
        report.get("timings").is_none(),
        "timings would break byte determinism"
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("trial"), "timings should go to stderr");
}

// ---------------------------------------------------------------------------
// Exit-code contract
// ---------------------------------------------------------------------------

#[test]
fn exit_codes_distinguish_validation_infeasible_and_io() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_chain_model(d);

    // Validation: node indices are 1-based, so node 0 is rejected.
    let out = tropex(
        d,
        &[
            "sample", "--model", "chain.json", "--condition", "0=1.0", "--n", "5", "--seed", "1",
            "--out", "s.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    // Infeasible: the chain forces X2 >= 2 X1, so (X1, X2) = (1, 0.5) is
    // impossible under the model.
    let out = tropex(
        d,
        &[
            "sample",
            "--model",
            "chain.json",
            "--condition",
            "1=1.0,2=0.5",
            "--n",
            "5",
            "--seed",
            "1",
            "--out",
            "s.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(3));

    // I/O: missing input file.
    let out = tropex(
        d,
        &["learn", "--input", "no-such-file.csv", "--out", "t.json"],
    );
    assert_eq!(out.status.code(), Some(4));

    // Usage errors from argument parsing also exit 2.
    let out = tropex(d, &["learn", "--out", "t.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn semantic_problems_in_readable_files_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // A structurally valid JSON file that is not a valid model: duplicate
    // edge entries collapse to a repeated parent/child pair.
    fs::write(
        d.join("bad.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "d": 2,
            "edges": [
                { "parent": 1, "child": 2, "coeff": 2.0 },
                { "parent": 1, "child": 2, "coeff": 3.0 },
            ],
            "innovations": [
                { "dist": "frechet", "params": { "shape": 1.0, "scale": 1.0 } },
                { "dist": "frechet", "params": { "shape": 1.0, "scale": 1.0 } },
            ],
        }))
        .unwrap(),
    )
    .unwrap();

    let out = tropex(d, &["cdf", "--model", "bad.json", "--point", "1,1"]);
    assert_eq!(out.status.code(), Some(2));
}

// ---------------------------------------------------------------------------
// Config file
// ---------------------------------------------------------------------------

#[test]
fn config_file_supplies_defaults_and_explicit_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("config.json"),
        r#"{ "simulate": { "gen-nodes": 5, "n": 30 } }"#,
    )
    .unwrap();

    assert_ok(&tropex(
        d,
        &[
            "simulate", "--config", "config.json", "--seed", "1", "--out", "a.csv",
        ],
    ));
    let a = fs::read_to_string(d.join("a.csv")).unwrap();
    assert_eq!(a.lines().next(), Some("X1,X2,X3,X4,X5"));
    assert_eq!(a.lines().count(), 31, "header plus 30 configured rows");

    // An explicit --n overrides the configured value.
    assert_ok(&tropex(
        d,
        &[
            "simulate", "--config", "config.json", "--n", "10", "--seed", "1", "--out", "b.csv",
        ],
    ));
    let b = fs::read_to_string(d.join("b.csv")).unwrap();
    assert_eq!(b.lines().count(), 11);

    // A config file pointing nowhere is an I/O failure.
    let out = tropex(
        d,
        &[
            "simulate", "--config", "missing.json", "--gen-nodes", "3", "--n", "5", "--seed",
            "1", "--out", "c.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(4));
}
