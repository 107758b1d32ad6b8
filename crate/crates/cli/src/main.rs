//! `tropex` binary: parse (with config-file defaults), dispatch, and map
//! failures to exit codes 0 (ok), 2 (validation), 3 (infeasible event),
//! 4 (I/O).

mod args;
mod run;
mod support;

use clap::Parser;

use args::{Cli, Command};
use support::{merge_config_args, Failure};

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let argv: Vec<String> = std::env::args().collect();
    let merged = match merge_config_args(argv) {
        Ok(v) => v,
        Err(f) => return fail(f),
    };
    let cli = match Cli::try_parse_from(&merged) {
        Ok(cli) => cli,
        Err(e) => e.exit(), // clap prints the message; exit 2 on bad usage
    };
    let result = match &cli.command {
        Command::Simulate(a) => run::run_simulate(a),
        Command::Learn(a) => run::run_learn(a),
        Command::Eval(a) => run::run_eval(a),
        Command::Sample(a) => run::run_sample(a),
        Command::Cdf(a) => run::run_cdf(a),
        Command::Ci(a) => run::run_ci(a),
        Command::Bench(a) => run::run_bench_cmd(a),
    };
    match result {
        Ok(()) => 0,
        Err(f) => fail(f),
    }
}

fn fail(f: Failure) -> i32 {
    eprintln!("error: {}", f.message());
    f.code()
}
