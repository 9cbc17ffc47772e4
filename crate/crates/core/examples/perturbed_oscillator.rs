//! Adding an external quartic term to an intrinsic cubic oscillator and comparing
//! the perturbed branch with the unperturbed one.

use std::collections::BTreeMap;

use anharmonic::perturbation::ComparisonOutcome;
use anharmonic::{perturbed_compare, OscillatorSpec};

fn main() -> Result<(), anharmonic::Error> {
    let spec = OscillatorSpec::reduced(&[0.5, -0.02, 0.0])?.with_n_max(3);

    for strength in [-0.0015, -0.0005, 0.0005, 0.0015, -0.5] {
        let delta = BTreeMap::from([(4, strength)]);
        let cmp = perturbed_compare(&spec, &delta)?;
        match cmp.outcome {
            ComparisonOutcome::Destabilized => println!("a'_4 += {strength:+}: destabilized, no admissible state"),
            ComparisonOutcome::Compared => {
                for s in &cmp.shifts {
                    println!(
                        "a'_4 += {strength:+}: dp {:.6} -> {:.6}, omega_an {:.6} -> {:.6}, dE_1 = {:+.6}",
                        s.dp_min_baseline,
                        s.dp_min_perturbed,
                        s.omega_an_baseline,
                        s.omega_an_perturbed,
                        s.level_deltas[1]
                    );
                }
            }
        }
    }
    Ok(())
}
