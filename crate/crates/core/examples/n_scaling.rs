//! Rescaling the coefficients to another level `n` moves every range by `sqrt(n)`
//! and leaves the dimensionless description of a branch untouched.

use anharmonic::spectrum::solve_at_level;
use anharmonic::OscillatorSpec;

fn main() -> Result<(), anharmonic::Error> {
    let spec = OscillatorSpec::reduced(&[0.5, -0.03, 0.001])?;
    let base = solve_at_level(&spec, 1)?;
    let (b1, p1) = base.retained().next().expect("retained branch");

    println!("{:>3} {:>14} {:>14} {:>14} {:>14}", "n", "dp_min", "dp/sqrt(n)", "q", "omega_an");
    for n in [1, 2, 4, 9, 16] {
        let sol = solve_at_level(&spec, n)?;
        let (b, p) = sol.retained().next().expect("retained branch");
        println!(
            "{n:>3} {:>14.10} {:>14.10} {:>14.10} {:>14.10}",
            b.dp_min,
            b.dp_min / f64::from(n).sqrt(),
            p.q,
            p.omega_an
        );
        assert!((b.dp_min / f64::from(n).sqrt() - b1.dp_min).abs() < 1e-10);
        assert!((p.omega_an - p1.omega_an).abs() < 1e-10);
    }
    Ok(())
}
