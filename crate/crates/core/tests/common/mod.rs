#![allow(dead_code)]

use std::collections::BTreeMap;

use anharmonic::{OscillatorSpec, UnitSystem};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const CUBIC_DP: f64 = 0.984_401_101_137_737_7;
pub const CUBIC_A2: f64 = 0.532_453_444_682_266_7;
pub const CUBIC_A3: f64 = -0.021_635_629_788_177_8;
pub const CUBIC_Q: f64 = 1.010_817_814_894_089;
pub const CUBIC_W2: f64 = 0.969_045_527_921_190_4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cubic() -> OscillatorSpec {
    OscillatorSpec::reduced(&[0.5, -0.02]).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Random spec of order `order`. Coefficients shrink by a log-uniform factor in
/// `ratio` per order in natural units; `negative` forces every `a'_{i>=3} < 0`.
pub fn random_spec(rng: &mut ChaCha8Rng, order: u32, ratio: (f64, f64), negative: bool) -> OscillatorSpec {
    let units = UnitSystem::new(
        rng.gen_range(0.5..2.0),
        rng.gen_range(0.5..2.0),
        rng.gen_range(0.5..2.0),
    )
    .unwrap();
    let (e, p) = (units.energy_scale(), units.momentum_scale());
    let mut c = 0.5 * rng.gen_range(0.8..1.25);
    let mut coeffs = BTreeMap::from([(2, c * e * p * p)]);
    for i in 3..=order {
        c *= rng.gen_range(ratio.0.ln()..ratio.1.ln()).exp();
        let sign = if negative || rng.gen_bool(0.5) { -1.0 } else { 1.0 };
        coeffs.insert(i, sign * c * e * p.powi(i as i32));
    }
    OscillatorSpec::new(units, order, coeffs).unwrap()
}

/// Convergence ratios at `dp` for a dense series, computed from the raw coefficients.
pub fn dense_ratios(spec: &OscillatorSpec, dp: f64) -> Vec<f64> {
    (2..spec.order())
        .map(|i| spec.effective(i + 1).abs() / (spec.effective(i).abs() * dp))
        .collect()
}
