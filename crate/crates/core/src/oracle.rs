//! Brute-force minimization of the energy function, independent of the
//! stationarity polynomial.
//!
//! The grid scan and the golden-section refinement never compare two rounded
//! energies directly. Near a minimum the energy is flat to `O(eps)` over a
//! window of width `O(sqrt(eps))`, which would cap the refinement at ~1e-8.
//! Instead `E(b) - E(a)` is evaluated in factored form `(b - a) * S(a, b)`,
//! where the divided difference
//!
//! ```text
//! S(a, b) = (a + b) / 2m - sum_i a'_i sum_{k=0..i-1} a^-(i-k) b^-(k+1)
//! ```
//!
//! carries no cancellation in `b - a`. Only its sign is used.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{energy_series, OscillatorSpec};
use crate::solver::Branch;

/// Golden-section stopping width, relative to the abscissa.
pub const GOLDEN_REL_TOL: f64 = 1e-13;
/// Default window `(0.01, 100]` in units of the harmonic momentum scale.
pub const DEFAULT_WINDOW: (f64, f64) = (0.01, 100.0);
pub const DEFAULT_GRID_POINTS: usize = 1_000_000;

const CHUNK: usize = 16_384;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleMinimum {
    pub dp: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub minima: Vec<OracleMinimum>,
    pub scan_range: (f64, f64),
    pub scan_step: f64,
    /// Set when the window holds no sampled minimum.
    pub no_minimum_in_window: bool,
}

/// Divided difference `(E(b) - E(a)) / (b - a)` evaluated without cancellation.
fn secant_slope(coeffs: &[f64], mass: f64, a: f64, b: f64) -> f64 {
    let (ra, rb) = (a.recip(), b.recip());
    let mut slope = (a + b) / (2.0 * mass);
    // inner(i) = sum_{k=0..i-1} ra^(i-k) rb^(k+1) = ra * (inner(i-1) + rb^i)
    let mut inner = 0.0;
    let mut rb_pow = 1.0;
    for (i, &c) in coeffs.iter().enumerate().skip(1) {
        rb_pow *= rb;
        inner = ra * (inner + rb_pow);
        if i >= 2 {
            slope -= c * inner;
        }
    }
    slope
}

/// Is `E(b) < E(a)`?
fn lower(coeffs: &[f64], mass: f64, a: f64, b: f64) -> bool {
    if a == b {
        return false;
    }
    let s = secant_slope(coeffs, mass, a, b);
    if b > a {
        s < 0.0
    } else {
        s > 0.0
    }
}

fn golden_section(coeffs: &[f64], mass: f64, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    for _ in 0..500 {
        if hi - lo <= GOLDEN_REL_TOL * hi.abs() {
            break;
        }
        // E(c) < E(d) keeps [lo, d]
        if lower(coeffs, mass, d, c) {
            hi = d;
            d = c;
            c = hi - INV_PHI * (hi - lo);
        } else {
            lo = c;
            c = d;
            d = lo + INV_PHI * (hi - lo);
        }
    }
    0.5 * (lo + hi)
}

/// Scans `(dp_lo, dp_hi]` with spacing `step` and refines every strict
/// sampled minimum by golden-section search.
///
/// The grid is split into fixed chunks that may run on several workers; the
/// merge is ordered, so the result does not depend on the thread count.
pub fn oracle_minima(spec: &OscillatorSpec, dp_lo: f64, dp_hi: f64, step: f64) -> Result<OracleResult> {
    if !(dp_lo > 0.0 && dp_hi > dp_lo && dp_hi.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "oracle window",
            reason: format!("need 0 < dp_lo < dp_hi, got ({dp_lo}, {dp_hi}]"),
        });
    }
    if !(step > 0.0 && step <= (dp_hi - dp_lo) / 1000.0) {
        return Err(Error::InvalidParameter {
            name: "oracle step",
            reason: format!("need 0 < step <= (dp_hi - dp_lo) / 1000, got {step}"),
        });
    }
    let coeffs = spec.effective_coeffs();
    let mass = spec.units().mass();
    let points = ((dp_hi - dp_lo) / step).floor() as usize + 1;
    let x = |k: usize| dp_lo + k as f64 * step;

    // descending[k] is true when E(x_{k+1}) < E(x_k)
    let descending: Vec<bool> = (0..points - 1)
        .into_par_iter()
        .with_min_len(CHUNK)
        .map(|k| lower(&coeffs, mass, x(k), x(k + 1)))
        .collect();

    let minima: Vec<OracleMinimum> = descending
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] && !w[1])
        .filter_map(|(k, _)| {
            let centre = k + 1;
            // strict: the right neighbour must be higher, not equal
            if secant_slope(&coeffs, mass, x(centre), x(centre + 1)) <= 0.0 {
                return None;
            }
            let dp = golden_section(&coeffs, mass, x(centre - 1), x(centre + 1));
            Some(OracleMinimum { dp, energy: energy_series(&coeffs, mass, dp) })
        })
        .collect();

    Ok(OracleResult {
        no_minimum_in_window: minima.is_empty(),
        minima,
        scan_range: (dp_lo, dp_hi),
        scan_step: step,
    })
}

/// Oracle over the default window, `10^6` grid points.
pub fn oracle_minima_default(spec: &OscillatorSpec) -> Result<OracleResult> {
    let scale = spec.units().momentum_scale();
    let (lo, hi) = (DEFAULT_WINDOW.0 * scale, DEFAULT_WINDOW.1 * scale);
    oracle_minima(spec, lo, hi, (hi - lo) / DEFAULT_GRID_POINTS as f64)
}

/// Relative agreement required between the polynomial path and the oracle.
pub const CROSS_CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchStatus {
    Matched,
    /// Paired, but further apart than [`CROSS_CHECK_TOL`].
    Discrepant,
    PolynomialOnly,
    OracleOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub j: Option<u32>,
    pub polynomial_dp: Option<f64>,
    pub accepted: Option<bool>,
    pub oracle_dp: Option<f64>,
    pub oracle_energy: Option<f64>,
    pub rel_discrepancy: Option<f64>,
    pub status: MatchStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub oracle: OracleResult,
    pub pairs: Vec<MatchPair>,
    /// Both sides list the same minima within tolerance.
    pub matches: bool,
}

/// Pairs every energy minimum of the polynomial path lying inside the oracle
/// window with the nearest oracle minimum, one to one.
pub fn cross_check(branches: &[Branch], oracle: &OracleResult) -> CrossCheck {
    let (lo, hi) = oracle.scan_range;
    let poly: Vec<&Branch> =
        branches.iter().filter(|b| b.is_minimum() && b.dp_min > lo && b.dp_min <= hi).collect();
    let mut candidates: Vec<(f64, usize, usize)> = poly
        .iter()
        .enumerate()
        .flat_map(|(a, b)| {
            oracle.minima.iter().enumerate().map(move |(k, m)| ((m.dp - b.dp_min).abs() / b.dp_min, a, k))
        })
        .collect();
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_poly = vec![false; poly.len()];
    let mut used_oracle = vec![false; oracle.minima.len()];
    let mut pairs = Vec::new();
    for (rel, a, k) in candidates {
        if used_poly[a] || used_oracle[k] {
            continue;
        }
        used_poly[a] = true;
        used_oracle[k] = true;
        let m = oracle.minima[k];
        pairs.push(MatchPair {
            j: Some(poly[a].index_j),
            polynomial_dp: Some(poly[a].dp_min),
            accepted: Some(poly[a].accepted),
            oracle_dp: Some(m.dp),
            oracle_energy: Some(m.energy),
            rel_discrepancy: Some(rel),
            status: if rel <= CROSS_CHECK_TOL { MatchStatus::Matched } else { MatchStatus::Discrepant },
        });
    }
    for b in poly.iter().zip(&used_poly).filter(|(_, u)| !**u).map(|(b, _)| b) {
        pairs.push(MatchPair {
            j: Some(b.index_j),
            polynomial_dp: Some(b.dp_min),
            accepted: Some(b.accepted),
            oracle_dp: None,
            oracle_energy: None,
            rel_discrepancy: None,
            status: MatchStatus::PolynomialOnly,
        });
    }
    for m in oracle.minima.iter().zip(&used_oracle).filter(|(_, u)| !**u).map(|(m, _)| m) {
        pairs.push(MatchPair {
            j: None,
            polynomial_dp: None,
            accepted: None,
            oracle_dp: Some(m.dp),
            oracle_energy: Some(m.energy),
            rel_discrepancy: None,
            status: MatchStatus::OracleOnly,
        });
    }
    pairs.sort_by(|x, y| {
        let key = |p: &MatchPair| p.polynomial_dp.or(p.oracle_dp).unwrap_or(0.0);
        key(x).total_cmp(&key(y))
    });
    let matches = pairs.iter().all(|p| p.status == MatchStatus::Matched);
    CrossCheck { oracle: oracle.clone(), pairs, matches }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::energy_at;
    use crate::units::UnitSystem;

    #[test]
    fn secant_matches_plain_difference_away_from_minimum() {
        let spec = OscillatorSpec::reduced(&[0.5, -0.02, 0.003]).unwrap();
        let c = spec.effective_coeffs();
        for &(a, b) in &[(0.3, 0.5), (1.2, 3.0), (2.0, 1.5)] {
            let plain = (energy_at(&spec, b, 1).unwrap() - energy_at(&spec, a, 1).unwrap()) / (b - a);
            let s = secant_slope(&c, 1.0, a, b);
            assert!((s - plain).abs() < 1e-12 * plain.abs().max(1.0), "{s} {plain}");
        }
    }

    #[test]
    fn harmonic_minimum() {
        let spec = OscillatorSpec::harmonic(UnitSystem::reduced());
        let r = oracle_minima(&spec, 0.1, 10.0, 1e-4).unwrap();
        assert_eq!(r.minima.len(), 1);
        assert!((r.minima[0].dp - 1.0).abs() < 1e-12);
        assert!((r.minima[0].energy - 1.0).abs() < 1e-14);
        assert!(!r.no_minimum_in_window);
    }

    #[test]
    fn cubic_minimum() {
        let spec = OscillatorSpec::reduced(&[0.5, -0.02]).unwrap();
        let r = oracle_minima_default(&spec).unwrap();
        assert_eq!(r.minima.len(), 1);
        assert!((r.minima[0].dp - 0.984_401_101_137_737_7).abs() < 1e-12);
        assert!((r.minima[0].energy - 0.979_528_483_066_186_5).abs() < 1e-14);
    }

    #[test]
    fn monotone_window_is_flagged() {
        let spec = OscillatorSpec::harmonic(UnitSystem::reduced());
        let r = oracle_minima(&spec, 2.0, 10.0, 1e-3).unwrap();
        assert!(r.minima.is_empty() && r.no_minimum_in_window);
    }

    #[test]
    fn cross_check_cubic() {
        let spec = OscillatorSpec::reduced(&[0.5, -0.02]).unwrap();
        let branches = crate::solver::stationary_branches(&spec).unwrap();
        let c = cross_check(&branches, &oracle_minima_default(&spec).unwrap());
        assert!(c.matches);
        assert_eq!(c.pairs.len(), 1);
        assert!(c.pairs[0].rel_discrepancy.unwrap() <= CROSS_CHECK_TOL);
    }

    #[test]
    fn rejects_bad_windows() {
        let spec = OscillatorSpec::harmonic(UnitSystem::reduced());
        assert!(oracle_minima(&spec, 0.0, 1.0, 1e-4).is_err());
        assert!(oracle_minima(&spec, 1.0, 0.5, 1e-4).is_err());
        assert!(oracle_minima(&spec, 0.1, 1.0, 0.01).is_err());
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let spec = OscillatorSpec::reduced(&[0.5, -0.03, 0.002]).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| oracle_minima(&spec, 0.01, 10.0, 1e-5).unwrap())
        };
        assert_eq!(run(1), run(4));
    }
}
