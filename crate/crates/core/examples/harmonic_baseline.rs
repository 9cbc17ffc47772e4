//! The purely quadratic oscillator: one branch, the familiar `(n + 1/2) hbar omega`
//! ladder, and equal kinetic and potential shares of the minimum energy.

use anharmonic::spectrum::virial_split;
use anharmonic::{spectrum, OscillatorSpec, UnitSystem};

fn main() -> Result<(), anharmonic::Error> {
    let units = UnitSystem::new(1.0, 2.0, 0.5)?;
    let spec = OscillatorSpec::harmonic(units).with_n_max(5);
    let table = spectrum(&spec)?;

    println!("hbar = {}, m = {}, omega_har = {}", units.hbar(), units.mass(), units.omega_har());
    println!("{:>3} {:>10} {:>10} {:>10}", "n", "E", "dp", "dx");
    for level in &table.branches[0].levels {
        println!("{:>3} {:>10.6} {:>10.6} {:>10.6}", level.n, level.energy, level.dp_an, level.dx);
    }

    for n in 1..=3 {
        let (kinetic, potential) = virial_split(&spec, n)?;
        println!("n = {n}: kinetic {kinetic:.6}, potential {potential:.6}");
    }
    Ok(())
}
