//! From accepted branches to frequencies and level ladders.
//!
//! Each accepted range `dp_min^(j)` defines dimensionless coefficients
//! `a_i = m a'_i / dp_min^(i+2)` obeying `sum i a_i = 1`, and from them
//!
//! ```text
//! q      = 1 + sum_{i>=3} (1 - i/2) a_i
//! w^2    = (1 - sum_{i>=3} i a_i)^(-1/2) = (2 a_2)^(-1/2)
//! omega  = w^2 omega_har
//! E(j,n) = n hbar omega^(j) + w^2(0) hbar omega_har / (2 q(0))
//! ```
//!
//! where branch (0) is the retained branch with the smallest range.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{apply_n_scaling, OscillatorSpec};
use crate::solver::{stationary_branches, Branch, RejectionReason};
use crate::units::UnitSystem;

/// Tolerance on the sum rule `sum i a_i = 1`.
pub const SUM_RULE_TOL: f64 = 1e-10;
/// Relative width within which two smallest ranges count as tied.
pub const ZERO_POINT_TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchParameters {
    /// Dimensionless `a_i` for `i = 2..N`.
    pub a: BTreeMap<u32, f64>,
    pub q: f64,
    pub w: f64,
    pub w_squared: f64,
    pub omega_an: f64,
    /// `a''_i = a_i w^(i+2)`.
    pub a_ddprime: BTreeMap<u32, f64>,
    /// `m omega_an^2`.
    pub k_an: f64,
}

impl BranchParameters {
    /// `sum_{i>=3} i a_i`.
    pub fn anharmonic_sum(&self) -> f64 {
        anharmonic_sum(&self.a)
    }

    /// `w^2` through the quadratic coefficient alone, `(2 a_2)^(-1/2)`.
    pub fn w_squared_from_a2(&self) -> f64 {
        (2.0 * self.a.get(&2).copied().unwrap_or(0.0)).powf(-0.5)
    }
}

fn anharmonic_sum(a: &BTreeMap<u32, f64>) -> f64 {
    a.range(3..).map(|(&i, &ai)| f64::from(i) * ai).sum()
}

pub(crate) fn raw_dimensionless(spec: &OscillatorSpec, dp_min: f64) -> BTreeMap<u32, f64> {
    let mass = spec.units().mass();
    (2..=spec.order())
        .map(|i| (i, mass * spec.effective(i) / dp_min.powi(i as i32 + 2)))
        .collect()
}

/// `a_i = m a'_i / dp_min^(i+2)` for an accepted branch, checked against the sum rule.
pub fn dimensionless_coefficients(spec: &OscillatorSpec, branch: &Branch) -> Result<BTreeMap<u32, f64>> {
    if !branch.accepted {
        return Err(Error::BranchNotAccepted(branch.index_j));
    }
    let a = raw_dimensionless(spec, branch.dp_min);
    let sum: f64 = a.iter().map(|(&i, &ai)| f64::from(i) * ai).sum();
    if (sum - 1.0).abs() > SUM_RULE_TOL {
        return Err(Error::Consistency(format!(
            "sum rule violated on branch {}: sum i a_i = {sum}",
            branch.index_j
        )));
    }
    Ok(a)
}

/// Normalization, frequency factor and anharmonic frequency of one branch.
pub fn branch_parameters(a: &BTreeMap<u32, f64>, units: &UnitSystem) -> Result<BranchParameters> {
    let s = anharmonic_sum(a);
    if s >= 1.0 {
        return Err(Error::BranchRejected(RejectionReason::ImaginaryFrequency));
    }
    let q = 1.0 + a.range(3..).map(|(&i, &ai)| (1.0 - f64::from(i) / 2.0) * ai).sum::<f64>();
    if q <= 0.0 {
        return Err(Error::BranchRejected(RejectionReason::NonpositiveNormalization));
    }
    let w_squared = (1.0 - s).powf(-0.5);
    let w = w_squared.sqrt();
    let omega_an = w_squared * units.omega_har();
    let a_ddprime = a.iter().map(|(&i, &ai)| (i, ai * w.powi(i as i32 + 2))).collect();
    Ok(BranchParameters {
        a: a.clone(),
        q,
        w,
        w_squared,
        omega_an,
        a_ddprime,
        k_an: units.mass() * omega_an * omega_an,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvedBranch {
    pub branch: Branch,
    /// Dimensionless coefficients; present for every stationary range.
    pub a: BTreeMap<u32, f64>,
    /// Present only for retained branches.
    pub params: Option<BranchParameters>,
}

/// Every stationary range of one spec, with parameters for the retained ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub spec_hash: u64,
    pub branches: Vec<SolvedBranch>,
}

impl Solution {
    pub fn retained(&self) -> impl Iterator<Item = (&Branch, &BranchParameters)> {
        self.branches.iter().filter_map(|b| b.params.as_ref().map(|p| (&b.branch, p)))
    }

    pub fn retained_count(&self) -> usize {
        self.retained().count()
    }
}

/// Solves the stationarity condition and derives parameters for every accepted branch.
///
/// Branches whose parameters do not exist (imaginary frequency, non-positive
/// normalization) are demoted to rejected.
pub fn solve(spec: &OscillatorSpec) -> Result<Solution> {
    let branches = stationary_branches(spec)?
        .into_iter()
        .map(|mut branch| {
            let a = if branch.accepted {
                dimensionless_coefficients(spec, &branch)?
            } else {
                raw_dimensionless(spec, branch.dp_min)
            };
            let params = if branch.accepted {
                match branch_parameters(&a, spec.units()) {
                    Ok(p) => Some(p),
                    Err(Error::BranchRejected(reason)) => {
                        branch.reject(reason);
                        None
                    }
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            Ok(SolvedBranch { branch, a, params })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Solution { spec_hash: spec.fingerprint(), branches })
}

/// Re-solves the problem with coefficients carried to level `n`.
pub fn solve_at_level(spec: &OscillatorSpec, n: u32) -> Result<Solution> {
    solve(&apply_n_scaling(spec, n)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub n: u32,
    pub energy: f64,
    pub dp_an: f64,
    pub dx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSpectrum {
    pub branch: Branch,
    pub params: BranchParameters,
    /// `n = 0..=n_max`; the `n = 0` entry carries the shared zero-point ranges.
    pub levels: Vec<Level>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeRange {
    pub n: u32,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub units: UnitSystem,
    pub n_max: u32,
    /// `index_j` of the branch with the smallest range.
    pub zero_point_branch: u32,
    pub zero_point_energy: f64,
    pub dp_0: f64,
    pub dx_0: f64,
    pub branches: Vec<BranchSpectrum>,
    /// `n = 1..=n_max`.
    pub dt: Vec<TimeRange>,
}

impl SpectrumTable {
    pub fn branch(&self, j: u32) -> Option<&BranchSpectrum> {
        self.branches.iter().find(|b| b.branch.index_j == j)
    }

    pub fn level(&self, j: u32, n: u32) -> Option<&Level> {
        self.branch(j)?.levels.get(n as usize)
    }

    /// The I values a harmonic level `n` splits into, one per branch.
    pub fn split_level(&self, n: u32) -> Vec<f64> {
        self.branches.iter().filter_map(|b| b.levels.get(n as usize)).map(|l| l.energy).collect()
    }

    /// `(R_E, R_p) = (q dE / dE_har, dp / dp_har)` for level `n >= 1`.
    pub fn harmonic_ratios(&self, j: u32, n: u32) -> Option<(f64, f64)> {
        if n == 0 {
            return None;
        }
        let b = self.branch(j)?;
        let l = b.levels.get(n as usize)?;
        let gap = f64::from(n) * self.units.hbar() * b.params.omega_an;
        Some((b.params.q * gap / self.units.harmonic_gap(n), l.dp_an / self.units.harmonic_dp(n)))
    }
}

/// Assembles the per-branch ladders. `branches` and `params` are parallel slices
/// of retained branches.
pub fn energy_levels(
    spec: &OscillatorSpec,
    params: &[BranchParameters],
    branches: &[Branch],
) -> Result<SpectrumTable> {
    if params.len() != branches.len() {
        return Err(Error::Consistency(format!(
            "{} branches but {} parameter sets",
            branches.len(),
            params.len()
        )));
    }
    if branches.is_empty() {
        return Err(Error::NoAdmissibleState);
    }
    let units = *spec.units();
    let (hbar, mass, omega_har) = (units.hbar(), units.mass(), units.omega_har());

    let smallest = branches.iter().map(|b| b.dp_min).fold(f64::INFINITY, f64::min);
    let zero = branches
        .iter()
        .zip(params)
        .filter(|(b, _)| b.dp_min - smallest <= ZERO_POINT_TIE_TOL * smallest)
        .min_by(|(_, p), (_, q)| p.omega_an.total_cmp(&q.omega_an))
        .expect("non-empty");
    let (zero_branch, zero_params) = zero;
    let zero_point_energy = zero_params.w_squared * hbar * omega_har / (2.0 * zero_params.q);
    let dp_0 = zero_params.w * (mass * hbar * omega_har).sqrt();
    let dx_0 = (hbar / (zero_params.omega_an * mass)).sqrt();

    let mut rows: Vec<BranchSpectrum> = branches
        .iter()
        .zip(params)
        .map(|(b, p)| {
            let levels = (0..=spec.n_max())
                .map(|n| {
                    if n == 0 {
                        return Level { n, energy: zero_point_energy, dp_an: dp_0, dx: dx_0 };
                    }
                    let nf = f64::from(n);
                    Level {
                        n,
                        energy: nf * hbar * p.omega_an + zero_point_energy,
                        dp_an: p.w * (mass * nf * hbar * omega_har).sqrt(),
                        dx: (nf * hbar / (p.omega_an * mass)).sqrt(),
                    }
                })
                .collect();
            BranchSpectrum { branch: b.clone(), params: p.clone(), levels }
        })
        .collect();
    rows.sort_by(|a, b| a.branch.dp_min.total_cmp(&b.branch.dp_min));

    let dt = (1..=spec.n_max())
        .map(|n| {
            let gap = units.harmonic_gap(n);
            TimeRange { n, dt: f64::from(n) * hbar / gap }
        })
        .collect();

    Ok(SpectrumTable {
        units,
        n_max: spec.n_max(),
        zero_point_branch: zero_branch.index_j,
        zero_point_energy,
        dp_0,
        dx_0,
        branches: rows,
        dt,
    })
}

/// Full pipeline: solve, retain, build ladders.
pub fn spectrum(spec: &OscillatorSpec) -> Result<SpectrumTable> {
    spectrum_of(spec, &solve(spec)?)
}

/// Ladders from an existing [`Solution`] of `spec`.
pub fn spectrum_of(spec: &OscillatorSpec, solution: &Solution) -> Result<SpectrumTable> {
    let (branches, params): (Vec<Branch>, Vec<BranchParameters>) =
        solution.retained().map(|(b, p)| (b.clone(), p.clone())).unzip();
    energy_levels(spec, &params, &branches)
}

/// The same problem with every coefficient above the quadratic one removed.
pub fn harmonic_spec(spec: &OscillatorSpec) -> OscillatorSpec {
    OscillatorSpec::new(*spec.units(), 2, BTreeMap::from([(2, spec.effective(2))]))
        .and_then(|s| s.with_n_ref(spec.n_ref()))
        .and_then(|s| s.with_eta(spec.eta()))
        .map(|s| s.with_n_max(spec.n_max()))
        .expect("a validated spec has a positive quadratic term")
}

pub fn harmonic_reference(spec: &OscillatorSpec) -> Result<SpectrumTable> {
    spectrum(&harmonic_spec(spec))
}

/// Kinetic and potential parts of the harmonic minimum energy at level `n`.
pub fn virial_split(spec: &OscillatorSpec, n: u32) -> Result<(f64, f64)> {
    let scaled = apply_n_scaling(&harmonic_spec(spec), n)?;
    let branch = stationary_branches(&scaled)?
        .into_iter()
        .find(|b| b.accepted)
        .ok_or(Error::NoAdmissibleState)?;
    let dp = branch.dp_min;
    Ok((dp * dp / (2.0 * spec.units().mass()), scaled.effective(2) / (dp * dp)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUBIC_DP: f64 = 0.984_401_101_137_737_7;

    fn cubic() -> OscillatorSpec {
        OscillatorSpec::reduced(&[0.5, -0.02]).unwrap().with_n_max(3)
    }

    #[test]
    fn harmonic_coefficients() {
        let spec = OscillatorSpec::harmonic(UnitSystem::reduced());
        let sol = solve(&spec).unwrap();
        let (b, p) = sol.retained().next().unwrap();
        assert_eq!(dimensionless_coefficients(&spec, b).unwrap(), BTreeMap::from([(2, 0.5)]));
        assert_eq!((p.q, p.w, p.omega_an), (1.0, 1.0, 1.0));
    }

    #[test]
    fn cubic_coefficients() {
        let spec = cubic();
        let sol = solve(&spec).unwrap();
        assert_eq!(sol.retained_count(), 1);
        let (b, p) = sol.retained().next().unwrap();
        assert!((b.dp_min - CUBIC_DP).abs() < 1e-14);
        assert!((p.a[&2] - 0.532_453_444_682_266_7).abs() < 1e-13);
        assert!((p.a[&3] + 0.021_635_629_788_177_8).abs() < 1e-14);
        assert!((2.0 * p.a[&2] + 3.0 * p.a[&3] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejected_branch_has_no_dimensionless_view() {
        let spec = cubic();
        let sol = solve(&spec).unwrap();
        let rejected = &sol.branches[0].branch;
        assert_eq!(dimensionless_coefficients(&spec, rejected), Err(Error::BranchNotAccepted(1)));
    }

    #[test]
    fn parameters_from_closed_forms() {
        let u = UnitSystem::reduced();
        let p = branch_parameters(&BTreeMap::from([(2, 0.5)]), &u).unwrap();
        assert_eq!((p.q, p.w, p.omega_an, p.k_an), (1.0, 1.0, 1.0, 1.0));

        let p = branch_parameters(
            &BTreeMap::from([(2, 0.532_453_444_682_266_7), (3, -0.021_635_629_788_177_8)]),
            &u,
        )
        .unwrap();
        assert!((p.q - 1.010_817_814_894_089).abs() < 1e-14);
        assert!((p.w_squared - 0.969_045_527_921_190_4).abs() < 1e-14);
        assert!((p.omega_an - p.w_squared).abs() < 1e-15);

        let p = branch_parameters(&BTreeMap::from([(2, 0.2), (3, 0.2)]), &u).unwrap();
        assert!((p.w_squared - 0.4f64.powf(-0.5)).abs() < 1e-14);
        assert!((p.q - 0.9).abs() < 1e-15);
        assert!((p.a_ddprime[&3] - 0.2 * p.w.powi(5)).abs() < 1e-15);
    }

    #[test]
    fn parameter_rejections() {
        let u = UnitSystem::reduced();
        let err = branch_parameters(&BTreeMap::from([(2, -0.1), (3, 0.4)]), &u).unwrap_err();
        assert_eq!(err, Error::BranchRejected(RejectionReason::ImaginaryFrequency));
        // sum_{i>=3} i a_i = 0.6 while q = 1 + 1 - 2.2
        let a = BTreeMap::from([(2, 0.2), (3, -2.0), (6, 1.1)]);
        let err = branch_parameters(&a, &u).unwrap_err();
        assert_eq!(err, Error::BranchRejected(RejectionReason::NonpositiveNormalization));
    }

    #[test]
    fn harmonic_ladder() {
        let spec = OscillatorSpec::harmonic(UnitSystem::reduced()).with_n_max(3);
        let t = spectrum(&spec).unwrap();
        let e: Vec<f64> = t.branches[0].levels.iter().map(|l| l.energy).collect();
        assert_eq!(e, vec![0.5, 1.5, 2.5, 3.5]);
        assert!(t.dt.iter().all(|d| d.dt == 1.0));
    }

    #[test]
    fn cubic_ladder() {
        let t = spectrum(&cubic()).unwrap();
        let zp = 0.479_337_380_902_178_05;
        let w2 = 0.969_045_527_921_190_4;
        assert!((t.zero_point_energy - zp).abs() < 1e-14);
        for l in &t.branches[0].levels {
            assert!((l.energy - (w2 * f64::from(l.n) + zp)).abs() < 1e-13);
        }
    }

    #[test]
    fn ladder_closure_and_spacing() {
        let spec = OscillatorSpec::new(
            UnitSystem::new(0.7, 2.5, 1.9).unwrap(),
            4,
            BTreeMap::from([(2, 3.0), (3, -0.2), (4, -0.01)]),
        )
        .unwrap()
        .with_n_max(6);
        let t = spectrum(&spec).unwrap();
        let b = &t.branches[0];
        for l in &b.levels[1..] {
            let n = f64::from(l.n);
            assert!((l.dx * l.dp_an / (n * 0.7) - 1.0).abs() < 1e-12);
        }
        for w in b.levels.windows(2) {
            let gap = w[1].energy - w[0].energy;
            assert!((gap - 0.7 * b.params.omega_an).abs() < 1e-12);
        }
        assert!((t.dx_0 * t.dp_0 - 0.7).abs() < 1e-12);
        assert!(t.dt.iter().all(|d| (d.dt - 1.0 / 1.9).abs() < 1e-15));
    }

    #[test]
    fn harmonic_reference_and_ratios() {
        let spec = cubic();
        let h = harmonic_reference(&spec).unwrap();
        let e: Vec<f64> = h.branches[0].levels.iter().map(|l| l.energy).collect();
        assert_eq!(e, vec![0.5, 1.5, 2.5, 3.5]);
        let (re, rp) = h.harmonic_ratios(h.zero_point_branch, 1).unwrap();
        assert!((re - 1.0).abs() < 1e-15 && (rp - 1.0).abs() < 1e-15);
        assert!(h.harmonic_ratios(h.zero_point_branch, 0).is_none());
    }

    #[test]
    fn virial_halves() {
        let spec = OscillatorSpec::harmonic(UnitSystem::reduced());
        for n in 1..5 {
            let (k, v) = virial_split(&spec, n).unwrap();
            assert!((k - f64::from(n) / 2.0).abs() < 1e-12);
            assert!((v - f64::from(n) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn no_branch_is_an_error() {
        let spec = OscillatorSpec::reduced(&[0.5, 5.0]).unwrap();
        assert_eq!(spectrum(&spec).unwrap_err(), Error::NoAdmissibleState);
    }

    #[test]
    fn zero_point_tie_prefers_softer_branch() {
        let spec = cubic();
        let sol = solve(&spec).unwrap();
        let (b, p) = sol.retained().next().unwrap();
        let mut b2 = b.clone();
        b2.index_j = 9;
        let mut p2 = p.clone();
        p2.omega_an *= 0.5;
        let t = energy_levels(&spec, &[p.clone(), p2], &[b.clone(), b2]).unwrap();
        assert_eq!(t.zero_point_branch, 9);
    }
}
