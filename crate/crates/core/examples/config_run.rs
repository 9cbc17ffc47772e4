//! Running a JSON configuration through the same path as the `anharm` binary,
//! with a command-line style override.
//!
//! The binary equivalent is
//! `anharm levels --config=crates/core/examples/configs/cubic_levels.json --n_max=3`.

use anharmonic::cli::run;
use anharmonic::config::parse_config;

fn main() {
    let document = include_str!("configs/cubic_levels.json");
    let overrides = [("n_max".to_string(), "3".to_string())];
    let config = match parse_config(document, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            std::process::exit(2);
        }
    };
    let outcome = run(&config);
    print!("{}", outcome.output);
    for d in &outcome.diagnostics {
        eprintln!("{d}");
    }
    std::process::exit(outcome.exit_code);
}
