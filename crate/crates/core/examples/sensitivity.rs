//! How far the minimum moves per unit change of each coefficient, from implicit
//! differentiation, next to a finite-difference check.

use anharmonic::{sensitivity, stationary_branches, OscillatorSpec};

fn main() -> Result<(), anharmonic::Error> {
    let spec = OscillatorSpec::reduced(&[0.5, -0.02, -0.001])?;
    let branch = stationary_branches(&spec)?.into_iter().find(|b| b.accepted).expect("accepted branch");
    println!("dp_min = {:.12}", branch.dp_min);

    for i in 2..=spec.order() {
        let r = sensitivity(&spec, &branch, i)?;
        println!(
            "d dp_min / d a'_{i} = {:+.10e}   finite difference {:+.10e}   identity residual {:.2e}",
            r.d_dpmin_d_aprime, r.fd_check, r.identity_residual
        );
    }

    // near a fold the derivative is undefined
    let fold = OscillatorSpec::reduced(&[0.5, -0.178_330_747_993_712_5])?;
    let b = stationary_branches(&fold)?.into_iter().max_by(|a, b| a.dp_min.total_cmp(&b.dp_min)).unwrap();
    match sensitivity(&fold, &b, 3) {
        Err(e) => println!("at a'_3 = -0.17833: {e}"),
        Ok(r) => println!("at a'_3 = -0.17833: {:+.3e}", r.d_dpmin_d_aprime),
    }
    Ok(())
}
