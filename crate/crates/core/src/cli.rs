//! Command dispatch for the `anharm` binary.
//!
//! ```text
//! anharm <command> --config=<path> [--key=value ...]
//! ```
//!
//! Exit codes: 0 success, 1 no admissible oscillation state, 2 configuration
//! or input error, 3 oracle mismatch or internal numerical failure.
//! Data goes to stdout (or `output_path`); diagnostics go to stderr, with
//! verbosity set by `ANHARM_LOG` (`quiet`, `info`, `debug`).

use std::fs;

use serde_json::json;

use crate::config::{parse_config, Command, OutputFormat, RunConfig};
use crate::error::Error;
use crate::oracle::{cross_check, oracle_minima, DEFAULT_GRID_POINTS, DEFAULT_WINDOW};
use crate::output;
use crate::perturbation::{perturbed_compare, sweep_with};
use crate::solver::stationary_branches;
use crate::spectrum::{harmonic_reference, solve, spectrum_of};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_STATE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

/// Result of one command: exit code, serialized data, diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub output: String,
    pub diagnostics: Vec<String>,
}

impl RunOutcome {
    fn data(exit_code: i32, output: String) -> Self {
        Self { exit_code, output, diagnostics: Vec::new() }
    }

    fn failure(exit_code: i32, message: String) -> Self {
        Self { exit_code, output: String::new(), diagnostics: vec![message] }
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::NoAdmissibleState => EXIT_NO_STATE,
        Error::Consistency(_) | Error::EigenSolver => EXIT_FAILURE,
        _ => EXIT_CONFIG,
    }
}

fn fail(err: Error) -> RunOutcome {
    RunOutcome::failure(exit_code_for(&err), format!("error: {err}"))
}

/// Runs one validated configuration.
pub fn run(config: &RunConfig) -> RunOutcome {
    match run_inner(config) {
        Ok(o) => o,
        Err(e) => fail(e),
    }
}

fn run_inner(config: &RunConfig) -> Result<RunOutcome, Error> {
    let spec = &config.spec;
    let json = config.output_format == OutputFormat::Json;
    let cmd = config.command.as_str();
    log::info!("running {cmd} on order-{} oscillator", spec.order());

    Ok(match config.command {
        Command::Solve => {
            let solution = solve(spec)?;
            let out = if json {
                output::json_document(cmd, spec, &solution)
            } else {
                output::solve_csv(spec, &solution)
            };
            let mut o = RunOutcome::data(EXIT_OK, out);
            if solution.retained_count() == 0 {
                o.exit_code = EXIT_NO_STATE;
                o.diagnostics.push(format!("error: {}", Error::NoAdmissibleState));
            }
            o
        }
        Command::Levels => {
            let solution = solve(spec)?;
            let table = spectrum_of(spec, &solution)?;
            let harmonic = harmonic_reference(spec)?;
            let out = if json {
                output::json_document(cmd, spec, &json!({ "spectrum": table, "harmonic_reference": harmonic }))
            } else {
                output::levels_csv(&table, &harmonic)
            };
            RunOutcome::data(EXIT_OK, out)
        }
        Command::Sweep => {
            let b = config.sweep.as_ref().expect("validated sweep block");
            let trace = sweep_with(spec, b.coeff_index, b.lo, b.hi, b.steps, b.amplification)?;
            let mut o = RunOutcome::data(
                EXIT_OK,
                if json { output::json_document(cmd, spec, &trace) } else { output::sweep_csv(&trace) },
            );
            for e in &trace.events {
                o.diagnostics.push(format!("step {}: {} {}", e.step, e.kind.as_str(), e.detail));
            }
            o
        }
        Command::Perturb => {
            let b = config.perturb.as_ref().expect("validated perturb block");
            let cmp = perturbed_compare(spec, &b.delta)?;
            let mut o = RunOutcome::data(
                EXIT_OK,
                if json { output::json_document(cmd, spec, &cmp) } else { output::perturb_csv(&cmp, spec.n_max()) },
            );
            if cmp.perturbed.is_none() {
                o.diagnostics.push("warning: perturbation destabilizes oscillator".into());
            }
            o
        }
        Command::OracleCheck => {
            let b = config.oracle.clone().unwrap_or_default();
            let scale = spec.units().momentum_scale();
            let lo = b.dp_lo.unwrap_or(DEFAULT_WINDOW.0 * scale);
            let hi = b.dp_hi.unwrap_or(DEFAULT_WINDOW.1 * scale);
            let step = b.step.unwrap_or((hi - lo) / DEFAULT_GRID_POINTS as f64);
            let oracle = oracle_minima(spec, lo, hi, step)?;
            let check = cross_check(&stationary_branches(spec)?, &oracle);
            let out = if json { output::json_document(cmd, spec, &check) } else { output::oracle_csv(&check) };
            let mut o = RunOutcome::data(if check.matches { EXIT_OK } else { EXIT_FAILURE }, out);
            if oracle.no_minimum_in_window {
                o.diagnostics.push(format!("warning: no energy minimum in scan window ({lo}, {hi}]"));
            }
            if !check.matches {
                o.diagnostics.push("error: polynomial path and oracle disagree".into());
            }
            o
        }
    })
}

fn init_logging() {
    let level = match std::env::var("ANHARM_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Warn,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
}

const USAGE: &str = "usage: anharm <solve|levels|sweep|perturb|oracle-check> --config=<path> [--key=value ...]";

/// Parses arguments (without the program name), runs, writes output. Returns the exit code.
pub fn main_with_args<I: IntoIterator<Item = String>>(args: I) -> i32 {
    init_logging();
    let mut command = None;
    let mut config_path = None;
    let mut overrides = Vec::new();
    for arg in args {
        if arg == "--help" || arg == "-h" {
            println!("{USAGE}");
            return EXIT_OK;
        }
        if let Some(flag) = arg.strip_prefix("--") {
            let Some((k, v)) = flag.split_once('=') else {
                eprintln!("error: flag `{arg}` must have the form --key=value\n{USAGE}");
                return EXIT_CONFIG;
            };
            if k == "config" {
                config_path = Some(v.to_string());
            } else {
                overrides.push((k.to_string(), v.to_string()));
            }
        } else if command.is_none() {
            command = Some(arg);
        } else {
            eprintln!("error: unexpected argument `{arg}`\n{USAGE}");
            return EXIT_CONFIG;
        }
    }
    let Some(command) = command else {
        eprintln!("error: missing command\n{USAGE}");
        return EXIT_CONFIG;
    };
    overrides.insert(0, ("command".to_string(), serde_json::Value::String(command).to_string()));
    let document = match config_path {
        Some(p) => match fs::read_to_string(&p) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: config {p}: {e}");
                return EXIT_CONFIG;
            }
        },
        None => String::new(),
    };
    let config = match parse_config(&document, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let outcome = run(&config);
    for d in &outcome.diagnostics {
        if d.starts_with("error") {
            eprintln!("{d}");
        } else {
            log::warn!("{d}");
        }
    }
    if !outcome.output.is_empty() {
        match &config.output_path {
            Some(p) => {
                if let Err(e) = fs::write(p, &outcome.output) {
                    eprintln!("error: writing {}: {e}", p.display());
                    return EXIT_CONFIG;
                }
            }
            None => print!("{}", outcome.output),
        }
    }
    outcome.exit_code
}
