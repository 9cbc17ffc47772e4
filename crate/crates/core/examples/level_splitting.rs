//! Two energy minima retained at once split every harmonic level in two.
//!
//! The inner minimum only passes a loosened convergence filter (`eta = 3`); with
//! the default `eta` the same spec keeps no branch at all.

use anharmonic::{spectrum, OscillatorSpec};

fn main() -> Result<(), anharmonic::Error> {
    let spec = OscillatorSpec::reduced(&[0.5, -0.2, 0.02])?.with_eta(3.0)?.with_n_max(4);
    let table = spectrum(&spec)?;

    for b in &table.branches {
        println!(
            "branch {}: dp_min = {:.6}, omega_an = {:.6}, q = {:.6}",
            b.branch.index_j, b.branch.dp_min, b.params.omega_an, b.params.q
        );
    }
    println!("zero point {:.6} from branch {}", table.zero_point_energy, table.zero_point_branch);
    for n in 0..=table.n_max {
        let levels: Vec<String> = table.split_level(n).iter().map(|e| format!("{e:.6}")).collect();
        println!("n = {n}: {}", levels.join("  "));
    }
    Ok(())
}
