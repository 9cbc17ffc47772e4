//! Sweeping the cubic coefficient until the convergence filter gives up on the
//! branch and the minimum finally merges with the maximum.

use anharmonic::perturbation::EventKind;
use anharmonic::{sweep, OscillatorSpec};

fn main() -> Result<(), anharmonic::Error> {
    let spec = OscillatorSpec::reduced(&[0.5, -0.02])?;
    let trace = sweep(&spec, 3, -0.02, -0.2, 19)?;

    for step in &trace.steps {
        let tracks: Vec<String> = step
            .branches
            .iter()
            .map(|b| format!("track {} dp = {:.6} omega = {:.6}", b.track, b.dp_min, b.omega_an))
            .collect();
        println!("a'_3 = {:+.3}: {}", step.value, if tracks.is_empty() { "-".into() } else { tracks.join(", ") });
    }
    for e in trace.events.iter().filter(|e| e.kind != EventKind::NoAdmissibleState) {
        println!("step {}: {} {}", e.step, e.kind.as_str(), e.detail);
    }
    let empty = trace.events_of(EventKind::NoAdmissibleState).count();
    println!("{empty} steps without an admissible state");
    Ok(())
}
