//! Minimizing the energy directly on a dense grid and comparing the result with
//! the minima found through the stationarity polynomial.

use anharmonic::oracle::MatchStatus;
use anharmonic::{cross_check, oracle_minima, stationary_branches, OscillatorSpec};

fn main() -> Result<(), anharmonic::Error> {
    let spec = OscillatorSpec::reduced(&[0.5, -0.03, 0.002, -0.0001])?;
    let oracle = oracle_minima(&spec, 0.05, 20.0, 1e-5)?;
    for m in &oracle.minima {
        println!("grid minimum dp = {:.14}, E = {:.14}", m.dp, m.energy);
    }

    let check = cross_check(&stationary_branches(&spec)?, &oracle);
    for pair in &check.pairs {
        let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.12}"));
        println!(
            "j = {}: polynomial {}, oracle {}, {:?}",
            pair.j.map_or("-".to_string(), |j| j.to_string()),
            show(pair.polynomial_dp),
            show(pair.oracle_dp),
            pair.status
        );
    }
    let verdict = check.pairs.iter().all(|p| p.status == MatchStatus::Matched);
    println!("verdict: {}", if verdict { "match" } else { "mismatch" });
    Ok(())
}
