//! A weak cubic correction. The stationarity polynomial has two positive roots:
//! a maximum at small range and the physical minimum near the harmonic range.

use anharmonic::{solve, OscillatorSpec};

fn main() -> Result<(), anharmonic::Error> {
    let spec = OscillatorSpec::reduced(&[0.5, -0.02])?;
    let solution = solve(&spec)?;

    for b in &solution.branches {
        let status = match b.branch.rejection_reason {
            Some(reason) => format!("rejected ({reason})"),
            None => "accepted".to_string(),
        };
        println!(
            "j = {}: dp_min = {:.12}, d2E = {:.6e}, max ratio = {:.4}, {status}",
            b.branch.index_j,
            b.branch.dp_min,
            b.branch.second_derivative,
            b.branch.max_convergence_ratio()
        );
        if let Some(p) = &b.params {
            println!("    a = {:?}", p.a);
            println!("    q = {:.10}, w^2 = {:.10}, omega_an = {:.10}", p.q, p.w_squared, p.omega_an);
        }
    }
    Ok(())
}
