//! One entry point per subcommand. Every run either writes its outputs
//! plus a `<out>.manifest.json`, or prints a JSON object to stdout with
//! the manifest embedded; wall-clock timings go to stderr only.

use std::path::Path;

use serde_json::{json, Value};

use tropex_core::bench::{run_bench, BenchConfig, DataRegime};
use tropex_core::citest::{ci_test_mc, CiQuery, DependenceStatistic};
use tropex_core::dag::Edge;
use tropex_core::generate::{random_network, NetworkShape};
use tropex_core::io::{
    export_csv, export_dot, ingest_csv, load_ground_truth, load_model, load_tree, save_model,
    save_tree, write_atomic,
};
use tropex_core::law::{cdf_network, tail_dependence, tail_dependence_approx};
use tropex_core::learn::{evaluate, learn_tree, LearnMethod};
use tropex_core::sampler::sample_conditional;
use tropex_core::scenarios::ConditioningEvent;
use tropex_core::scores::QtreeParams;
use tropex_core::simulate::{
    drought_scenario, simulate_network, MissingRates, NoiseSpec, ObservationSet,
};

use crate::args::{
    BenchArgs, CdfArgs, CiArgs, EvalArgs, LearnArgs, MethodArg, RegimeArg, SampleArgs, ShapeArg,
    SimulateArgs,
};
use crate::support::{
    ci_failure, learn_failure, manifest_value, parse_block, parse_condition, parse_point, pretty,
    sampler_failure, scenario_failure, validation, write_manifest, Failure,
};

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

fn params_of<T: serde::Serialize>(args: &T) -> Value {
    serde_json::to_value(args).expect("argument structs serialize cleanly")
}

/// Writes `body` to `out` with a manifest file, or prints it to stdout
/// with the manifest embedded under a "manifest" key.
fn deliver(
    subcommand: &str,
    params: Value,
    mut body: Value,
    out: Option<&Path>,
) -> Result<(), Failure> {
    match out {
        Some(path) => {
            write_atomic(path, &pretty(&body))?;
            write_manifest(subcommand, params, &[path])
        }
        None => {
            body.as_object_mut()
                .expect("result body is a JSON object")
                .insert(
                    "manifest".to_string(),
                    manifest_value(subcommand, params, &[]),
                );
            print!("{}", pretty(&body));
            Ok(())
        }
    }
}

fn learn_method(method: MethodArg, params: QtreeParams) -> LearnMethod {
    match method {
        MethodArg::Qtree => LearnMethod::Qtree(params),
        MethodArg::Corr => LearnMethod::Correlation,
    }
}

fn one_based_root(root: Option<usize>) -> Result<Option<usize>, Failure> {
    match root {
        Some(0) => Err(Failure::Validation(
            "node indices are 1-based; 0 is not a node".to_string(),
        )),
        Some(k) => Ok(Some(k - 1)),
        None => Ok(None),
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

pub fn run_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let net = match (&args.model, args.gen_nodes) {
        (Some(path), None) => load_model(path)?,
        (None, Some(d)) => {
            let shape = match args.gen_shape {
                ShapeArg::Tree => NetworkShape::Tree,
                ShapeArg::Dag => NetworkShape::Dag {
                    density: args.gen_density,
                },
            };
            random_network(d, shape, (args.gen_coeff_min, args.gen_coeff_max), args.seed)
                .map_err(validation)?
        }
        _ => {
            return Err(Failure::Validation(
                "exactly one of --model and --gen-nodes is required".to_string(),
            ))
        }
    };

    let obs: ObservationSet = if args.drought {
        drought_scenario(&net, args.n, args.base_level, args.extreme_rate, args.seed)
            .map_err(validation)?
            .observations
    } else {
        let noise = NoiseSpec {
            sigma: args.sigma,
            mcar: MissingRates::Uniform(args.mcar),
            extreme_missing_prob: args.extreme_missing_prob,
            extreme_quantile: args.extreme_quantile,
        };
        simulate_network(&net, args.n, &noise, args.seed).map_err(validation)?
    };

    export_csv(&obs, &args.out)?;
    let mut outputs: Vec<&Path> = vec![&args.out];
    if let Some(model_out) = &args.save_model {
        save_model(&net, model_out)?;
        outputs.push(model_out);
    }
    write_manifest("simulate", params_of(args), &outputs)
}

// ---------------------------------------------------------------------------
// learn
// ---------------------------------------------------------------------------

pub fn run_learn(args: &LearnArgs) -> Result<(), Failure> {
    let obs = ingest_csv(&args.input, args.log)?;
    let method = learn_method(
        args.method,
        QtreeParams {
            r: args.r,
            min_support: args.min_support,
            coeff_quantile: args.coeff_quantile,
            extreme_filter_quantile: args.extreme_filter,
        },
    );
    let root = one_based_root(args.root)?;
    let result = learn_tree(&obs, &method, root).map_err(learn_failure)?;
    save_tree(obs.labels(), &result.tree, &args.out)?;
    write_manifest("learn", params_of(args), &[&args.out])
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

fn edge_labels(edges: &[Edge], labels: &[String]) -> Vec<Value> {
    edges
        .iter()
        .map(|e| json!({"parent": labels[e.parent], "child": labels[e.child]}))
        .collect()
}

pub fn run_eval(args: &EvalArgs) -> Result<(), Failure> {
    let (labels, tree) = load_tree(&args.estimate)?;
    let truth = load_ground_truth(&args.truth, &labels)?;
    let report = evaluate(&tree, &truth).map_err(learn_failure)?;
    let body = json!({
        "precision": report.precision,
        "recall": report.recall,
        "truth_edge_count": report.truth_edge_count,
        "correct": edge_labels(&report.correct, &labels),
        "wrong": edge_labels(&report.wrong, &labels),
        "reversed": edge_labels(&report.reversed, &labels),
        "missed": edge_labels(&report.missed, &labels),
    });

    if let Some(dot_path) = &args.dot {
        let dot = export_dot(&labels, &tree, Some(&truth))?;
        write_atomic(dot_path, &dot)?;
    }
    let mut outputs: Vec<&Path> = Vec::new();
    if let Some(p) = &args.out {
        write_atomic(p, &pretty(&body))?;
        outputs.push(p);
    }
    if let Some(p) = &args.dot {
        outputs.push(p);
    }
    if outputs.is_empty() {
        return deliver("eval", params_of(args), body, None);
    }
    if args.out.is_none() {
        print!("{}", pretty(&body));
    }
    write_manifest("eval", params_of(args), &outputs)
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

pub fn run_sample(args: &SampleArgs) -> Result<(), Failure> {
    let net = load_model(&args.model)?;
    let d = net.node_count();
    let pairs = parse_condition(&args.condition)?;
    if pairs.is_empty() {
        return Err(Failure::Validation(
            "--condition must fix at least one coordinate".to_string(),
        ));
    }
    let event = ConditioningEvent::new(&pairs, d).map_err(scenario_failure)?;
    let draws = sample_conditional(net.star(), &event, net.innovations(), args.n, args.seed)
        .map_err(sampler_failure)?;

    let labels = ObservationSet::default_labels(d);
    let mut text = String::from("scenario,");
    text.push_str(&labels.join(","));
    text.push('\n');
    for draw in &draws {
        text.push_str(&format!("{}", draw.scenario + 1));
        for v in &draw.values {
            text.push(',');
            text.push_str(&format!("{v}"));
        }
        text.push('\n');
    }
    write_atomic(&args.out, &text)?;
    write_manifest("sample", params_of(args), &[&args.out])
}

// ---------------------------------------------------------------------------
// cdf
// ---------------------------------------------------------------------------

pub fn run_cdf(args: &CdfArgs) -> Result<(), Failure> {
    let net = load_model(&args.model)?;
    let x = parse_point(&args.point)?;
    let value = cdf_network(&net, &x).map_err(validation)?;
    let ell = tail_dependence(net.star(), &x).map_err(validation)?;
    let ell_lower = tail_dependence_approx(net.star(), &x).map_err(validation)?;
    let body = json!({
        "point": x,
        "cdf": value,
        "tail_dependence": ell,
        "tail_dependence_lower_bound": ell_lower,
    });
    deliver("cdf", params_of(args), body, args.out.as_deref())
}

// ---------------------------------------------------------------------------
// ci
// ---------------------------------------------------------------------------

pub fn run_ci(args: &CiArgs) -> Result<(), Failure> {
    let net = load_model(&args.model)?;
    let d = net.node_count();
    let block_i = parse_block(&args.block_i)?;
    let block_j = parse_block(&args.block_j)?;
    let pairs = match &args.context {
        Some(text) => parse_condition(text)?,
        None => Vec::new(),
    };
    let event = ConditioningEvent::new(&pairs, d).map_err(scenario_failure)?;
    let query = CiQuery {
        block_i,
        block_j,
        event,
        samples: args.m,
        permutations: args.perms,
        statistic: DependenceStatistic::RankDistanceCorrelation,
    };
    let result = ci_test_mc(&net, &query, args.seed).map_err(ci_failure)?;
    let body = json!({
        "statistic": result.statistic,
        "p_value": result.p_value,
        "samples_used": result.samples_used,
        "degenerate": result.degenerate,
        "degenerate_flags": result
            .degenerate_nodes
            .iter()
            .map(|v| v + 1)
            .collect::<Vec<_>>(),
    });
    deliver("ci", params_of(args), body, args.out.as_deref())
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

pub fn run_bench_cmd(args: &BenchArgs) -> Result<(), Failure> {
    let shape = match args.shape {
        ShapeArg::Tree => NetworkShape::Tree,
        ShapeArg::Dag => NetworkShape::Dag {
            density: args.density,
        },
    };
    let data = match args.regime {
        RegimeArg::Simulated => DataRegime::Simulated {
            noise: NoiseSpec {
                sigma: args.sigma,
                mcar: MissingRates::Uniform(args.mcar),
                ..NoiseSpec::noiseless()
            },
        },
        RegimeArg::Drought => DataRegime::Drought {
            base_level: args.base_level,
            extreme_rate: args.extreme_rate,
        },
    };
    let method = learn_method(
        args.method,
        QtreeParams {
            r: args.r,
            min_support: args.min_support,
            extreme_filter_quantile: args.extreme_filter,
            ..QtreeParams::default()
        },
    );
    let config = BenchConfig {
        trials: args.trials,
        d: args.d,
        n: args.n,
        seed: args.seed,
        shape,
        coeff_range: (args.coeff_min, args.coeff_max),
        data,
        method,
        root: one_based_root(args.root)?,
    };
    let (report, timings) = run_bench(&config).map_err(|e| match e {
        tropex_core::bench::BenchError::Learn(inner) => learn_failure(inner),
        other => validation(other),
    })?;

    let body = serde_json::to_value(&report).expect("report serializes cleanly");
    write_atomic(&args.out, &pretty(&body))?;
    for (t, secs) in timings.per_trial_seconds.iter().enumerate() {
        eprintln!("trial {t}: {secs:.3}s");
    }
    eprintln!("total: {:.3}s", timings.total_seconds);
    write_manifest("bench", params_of(args), &[&args.out])
}
