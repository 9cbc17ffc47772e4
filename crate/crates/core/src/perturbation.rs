//! Coefficient sensitivity, sweeps with branch tracking, and perturbed-oscillator comparison.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::OscillatorSpec;
use crate::solver::{build_polynomial, find_positive_real_roots, Branch};
use crate::spectrum::{raw_dimensionless, solve, spectrum_of, Solution, SpectrumTable};

/// Relative central-difference step used for the numeric derivative.
pub const FD_REL_STEP: f64 = 1e-6;
/// `|P'(r) r|` below this fraction of the term-wise magnitude marks a fold.
pub const FOLD_TOL: f64 = 1e-6;
/// Largest `|ln(dp_k / dp_{k-1})|` accepted as the same branch between sweep steps.
pub const MATCH_LOG_WINDOW: f64 = 0.25;
pub const DEFAULT_AMPLIFICATION: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub branch_j: u32,
    pub coeff_index: u32,
    pub d_dpmin_d_aprime: f64,
    pub fd_check: f64,
    /// Residual of `da'_i = a'_i ((i+2) d(dp)/dp + da_i / a_i)` at the finite-difference step.
    pub identity_residual: f64,
}

fn check_index(spec: &OscillatorSpec, i: u32) -> Result<()> {
    if (2..=spec.order()).contains(&i) {
        Ok(())
    } else {
        Err(Error::CoefficientIndex { index: i, order: spec.order() })
    }
}

/// Positive stationary range of `spec` closest (in log space) to `target`.
fn nearest_root(spec: &OscillatorSpec, target: f64) -> Result<f64> {
    find_positive_real_roots(&build_polynomial(spec))?
        .into_iter()
        .min_by(|a, b| (a / target).ln().abs().total_cmp(&(b / target).ln().abs()))
        .ok_or_else(|| Error::Consistency("stationary range lost under a small coefficient step".into()))
}

fn bumped(spec: &OscillatorSpec, i: u32, delta: f64) -> Result<OscillatorSpec> {
    let base = spec.intrinsic_coeffs().get(&i).copied().unwrap_or(0.0);
    spec.clone().with_intrinsic(i, base + delta)
}

/// Natural size of `a'_i` near the range `dp`, used to size finite steps.
fn coefficient_scale(spec: &OscillatorSpec, i: u32, dp: f64) -> f64 {
    spec.effective(i).abs().max(spec.effective(2) * dp.powi(i as i32 - 2))
}

/// Residual of the first-order identity for a step `delta` in `a'_i`, using the
/// re-solved range and dimensionless coefficient. Shrinks as `O(delta^2)`.
pub fn identity_residual(spec: &OscillatorSpec, branch: &Branch, i: u32, delta: f64) -> Result<f64> {
    check_index(spec, i)?;
    let r = branch.dp_min;
    let mass = spec.units().mass();
    let perturbed = bumped(spec, i, delta)?;
    let r_new = nearest_root(&perturbed, r)?;
    let a_old = raw_dimensionless(spec, r)[&i];
    let a_new = raw_dimensionless(&perturbed, r_new)[&i];
    // a'_i / a_i = r^(i+2) / m, which keeps the identity finite when a_i = 0
    let predicted = spec.effective(i) * f64::from(i + 2) * (r_new - r) / r
        + r.powi(i as i32 + 2) * (a_new - a_old) / mass;
    Ok(delta - predicted)
}

/// `d(dp_min)/d(a'_i)` by implicit differentiation of the stationarity polynomial,
/// checked against a central difference that re-solves the polynomial.
pub fn sensitivity(spec: &OscillatorSpec, branch: &Branch, i: u32) -> Result<SensitivityReport> {
    check_index(spec, i)?;
    let poly = build_polynomial(spec);
    let r = branch.dp_min;
    let dpoly = poly.derivative(r);
    let degree = poly.degree();
    let magnitude: f64 = poly
        .coefficients
        .iter()
        .enumerate()
        .map(|(k, c)| c.abs() * r.powi((degree - k) as i32))
        .sum();
    if (dpoly * r).abs() <= FOLD_TOL * magnitude {
        return Err(Error::DegenerateStationaryPoint);
    }
    if !branch.accepted {
        return Err(Error::BranchNotAccepted(branch.index_j));
    }
    let mass = spec.units().mass();
    // dP/da'_i = -m i r^(N-i)
    let order = spec.order() as i32;
    let analytic = mass * f64::from(i) * r.powi(order - i as i32) / dpoly;

    let h = FD_REL_STEP * coefficient_scale(spec, i, r);
    let up = nearest_root(&bumped(spec, i, h)?, r)?;
    let down = nearest_root(&bumped(spec, i, -h)?, r)?;
    let fd_check = (up - down) / (2.0 * h);

    Ok(SensitivityReport {
        branch_j: branch.index_j,
        coeff_index: i,
        d_dpmin_d_aprime: analytic,
        fd_check,
        identity_residual: identity_residual(spec, branch, i, h)?,
    })
}

/// Greedy one-to-one matching of two range lists by log distance.
fn match_ranges(prev: &[f64], cur: &[f64], window: Option<f64>) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(f64, usize, usize)> = prev
        .iter()
        .enumerate()
        .flat_map(|(a, &p)| cur.iter().enumerate().map(move |(b, &c)| ((c / p).ln().abs(), a, b)))
        .filter(|(d, _, _)| window.is_none_or(|w| *d <= w))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let (mut used_prev, mut used_cur) = (vec![false; prev.len()], vec![false; cur.len()]);
    let mut out = Vec::new();
    for (_, a, b) in pairs {
        if !used_prev[a] && !used_cur[b] {
            used_prev[a] = true;
            used_cur[b] = true;
            out.push((a, b));
        }
    }
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    BranchBorn,
    BranchDied,
    FilterFlip,
    NoAdmissibleState,
    SolveFailed,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::BranchBorn => "branch_born",
            Self::BranchDied => "branch_died",
            Self::FilterFlip => "filter_flip",
            Self::NoAdmissibleState => "no_admissible_state",
            Self::SolveFailed => "solve_failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEvent {
    pub step: usize,
    pub kind: EventKind,
    pub track: Option<u32>,
    pub detail: String,
}

/// A retained branch at one sweep step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedBranch {
    pub track: u32,
    pub index_j: u32,
    pub dp_min: f64,
    pub omega_an: f64,
    pub q: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSnapshot {
    pub step: usize,
    pub value: f64,
    pub branches: Vec<TrackedBranch>,
    /// Number of energy minima at this step, retained or not.
    pub minima: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTrace {
    pub coeff_index: u32,
    pub amplification: f64,
    pub values: Vec<f64>,
    pub steps: Vec<StepSnapshot>,
    pub events: Vec<SweepEvent>,
    pub instability_flags: Vec<usize>,
}

impl SweepTrace {
    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &SweepEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

struct Tracked {
    track: u32,
    dp: f64,
    retained: bool,
}

fn minima_of(solution: &Solution) -> Vec<(f64, bool, String)> {
    solution
        .branches
        .iter()
        .filter(|b| b.branch.is_minimum())
        .map(|b| {
            let status = match b.branch.rejection_reason {
                None => "accepted".to_string(),
                Some(r) => format!("rejected ({r})"),
            };
            (b.branch.dp_min, b.params.is_some(), status)
        })
        .collect()
}

/// [`sweep_with`] using the default amplification factor.
pub fn sweep(spec: &OscillatorSpec, i: u32, lo: f64, hi: f64, steps: usize) -> Result<SweepTrace> {
    sweep_with(spec, i, lo, hi, steps, DEFAULT_AMPLIFICATION)
}

/// Solves the problem for `steps` evenly spaced values of `a'_i` in `[lo, hi]`
/// and follows every energy minimum from step to step.
///
/// Steps run independently (possibly in parallel); matching is sequential in
/// step order. A matched step is flagged unstable when the relative jump of
/// `dp_min` exceeds `amplification` times the relative coefficient step.
pub fn sweep_with(
    spec: &OscillatorSpec,
    i: u32,
    lo: f64,
    hi: f64,
    steps: usize,
    amplification: f64,
) -> Result<SweepTrace> {
    check_index(spec, i)?;
    if steps < 2 {
        return Err(Error::InvalidParameter { name: "steps", reason: format!("need at least 2, got {steps}") });
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidParameter { name: "sweep range", reason: "bounds must be finite".into() });
    }
    let t = |k: usize| k as f64 / (steps - 1) as f64;
    // interpolate from both ends so the endpoints are exact
    let values: Vec<f64> = (0..steps).map(|k| lo * (1.0 - t(k)) + hi * t(k)).collect();
    let solutions: Vec<Result<Solution>> = values
        .par_iter()
        .map(|&v| spec.clone().with_intrinsic(i, v).and_then(|s| solve(&s)))
        .collect();

    let mut events = Vec::new();
    let mut instability_flags = Vec::new();
    let mut snapshots = Vec::with_capacity(steps);
    let mut prev: Vec<Tracked> = Vec::new();
    let mut next_track = 1u32;

    for (step, (solution, &value)) in solutions.iter().zip(&values).enumerate() {
        let minima = match solution {
            Ok(s) => minima_of(s),
            Err(e) => {
                events.push(SweepEvent { step, kind: EventKind::SolveFailed, track: None, detail: e.to_string() });
                Vec::new()
            }
        };
        let cur_dp: Vec<f64> = minima.iter().map(|m| m.0).collect();
        let mut cur: Vec<Option<u32>> = vec![None; minima.len()];

        if step > 0 {
            let prev_dp: Vec<f64> = prev.iter().map(|t| t.dp).collect();
            let pairs = match_ranges(&prev_dp, &cur_dp, Some(MATCH_LOG_WINDOW));
            let prev_value = values[step - 1];
            let rel_coeff = (value - prev_value).abs() / prev_value.abs().max(value.abs());
            let mut matched_prev = vec![false; prev.len()];
            for &(a, b) in &pairs {
                matched_prev[a] = true;
                let t = &prev[a];
                cur[b] = Some(t.track);
                if t.retained != minima[b].1 {
                    events.push(SweepEvent {
                        step,
                        kind: EventKind::FilterFlip,
                        track: Some(t.track),
                        detail: format!("dp_min {:.6e} now {}", minima[b].0, minima[b].2),
                    });
                }
                let rel_jump = (minima[b].0 - t.dp).abs() / t.dp;
                if rel_coeff > 0.0 && rel_jump > amplification * rel_coeff && instability_flags.last() != Some(&step) {
                    instability_flags.push(step);
                }
            }
            for t in prev.iter().zip(&matched_prev).filter(|(_, m)| !**m).map(|(t, _)| t) {
                events.push(SweepEvent {
                    step,
                    kind: EventKind::BranchDied,
                    track: Some(t.track),
                    detail: format!("last dp_min {:.6e}", t.dp),
                });
            }
        }
        for (b, slot) in cur.iter_mut().enumerate() {
            if slot.is_none() {
                *slot = Some(next_track);
                if step > 0 {
                    events.push(SweepEvent {
                        step,
                        kind: EventKind::BranchBorn,
                        track: Some(next_track),
                        detail: format!("dp_min {:.6e} {}", minima[b].0, minima[b].2),
                    });
                }
                next_track += 1;
            }
        }
        prev = minima
            .iter()
            .zip(&cur)
            .map(|(m, t)| Tracked { track: t.expect("assigned"), dp: m.0, retained: m.1 })
            .collect();

        let mut branches = Vec::new();
        if let Ok(s) = solution {
            for sb in &s.branches {
                let Some(p) = &sb.params else { continue };
                let track = prev
                    .iter()
                    .find(|t| t.dp == sb.branch.dp_min)
                    .map(|t| t.track)
                    .expect("retained branches are minima");
                branches.push(TrackedBranch {
                    track,
                    index_j: sb.branch.index_j,
                    dp_min: sb.branch.dp_min,
                    omega_an: p.omega_an,
                    q: p.q,
                    w: p.w,
                });
            }
        }
        if branches.is_empty() && solution.is_ok() {
            events.push(SweepEvent {
                step,
                kind: EventKind::NoAdmissibleState,
                track: None,
                detail: format!("a'_{i} = {value:.6e}"),
            });
        }
        snapshots.push(StepSnapshot { step, value, branches, minima: minima.len() });
    }

    Ok(SweepTrace {
        coeff_index: i,
        amplification,
        values,
        steps: snapshots,
        events,
        instability_flags,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonOutcome {
    Compared,
    /// The perturbed problem has no admissible oscillation state.
    Destabilized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchShift {
    pub baseline_j: u32,
    pub perturbed_j: u32,
    pub dp_min_baseline: f64,
    pub dp_min_perturbed: f64,
    pub d_dp_min: f64,
    pub omega_an_baseline: f64,
    pub omega_an_perturbed: f64,
    pub d_omega_an: f64,
    /// Sign of `omega_an(perturbed) - omega_an(baseline)`.
    pub omega_shift: i8,
    /// Perturbed minus baseline energy, `n = 0..=n_max`.
    pub level_deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationComparison {
    pub outcome: ComparisonOutcome,
    /// Perturbation series after adding `delta` to the existing one.
    pub merged_perturbation: BTreeMap<u32, f64>,
    pub baseline: SpectrumTable,
    pub perturbed: Option<SpectrumTable>,
    pub shifts: Vec<BranchShift>,
    pub unmatched_baseline: Vec<u32>,
    pub unmatched_perturbed: Vec<u32>,
}

/// Adds `delta` to the perturbation series and compares the two spectra branch by branch.
pub fn perturbed_compare(spec: &OscillatorSpec, delta: &BTreeMap<u32, f64>) -> Result<PerturbationComparison> {
    let mut merged = spec.perturbation_coeffs().clone();
    for (&i, &d) in delta {
        *merged.entry(i).or_insert(0.0) += d;
    }
    let perturbed_spec = spec.clone().with_perturbation(merged.clone())?;
    let baseline = spectrum_of(spec, &solve(spec)?)?;
    let perturbed = match spectrum_of(&perturbed_spec, &solve(&perturbed_spec)?) {
        Ok(t) => t,
        Err(Error::NoAdmissibleState) => {
            return Ok(PerturbationComparison {
                outcome: ComparisonOutcome::Destabilized,
                merged_perturbation: merged,
                unmatched_baseline: baseline.branches.iter().map(|b| b.branch.index_j).collect(),
                baseline,
                perturbed: None,
                shifts: Vec::new(),
                unmatched_perturbed: Vec::new(),
            })
        }
        Err(e) => return Err(e),
    };

    let base_dp: Vec<f64> = baseline.branches.iter().map(|b| b.branch.dp_min).collect();
    let pert_dp: Vec<f64> = perturbed.branches.iter().map(|b| b.branch.dp_min).collect();
    let pairs = match_ranges(&base_dp, &pert_dp, None);
    let shifts = pairs
        .iter()
        .map(|&(a, b)| {
            let (x, y) = (&baseline.branches[a], &perturbed.branches[b]);
            let d_omega = y.params.omega_an - x.params.omega_an;
            BranchShift {
                baseline_j: x.branch.index_j,
                perturbed_j: y.branch.index_j,
                dp_min_baseline: x.branch.dp_min,
                dp_min_perturbed: y.branch.dp_min,
                d_dp_min: y.branch.dp_min - x.branch.dp_min,
                omega_an_baseline: x.params.omega_an,
                omega_an_perturbed: y.params.omega_an,
                d_omega_an: d_omega,
                omega_shift: if d_omega > 0.0 {
                    1
                } else if d_omega < 0.0 {
                    -1
                } else {
                    0
                },
                level_deltas: x.levels.iter().zip(&y.levels).map(|(l0, l1)| l1.energy - l0.energy).collect(),
            }
        })
        .collect();
    let unmatched_baseline = (0..base_dp.len())
        .filter(|a| !pairs.iter().any(|p| p.0 == *a))
        .map(|a| baseline.branches[a].branch.index_j)
        .collect();
    let unmatched_perturbed = (0..pert_dp.len())
        .filter(|b| !pairs.iter().any(|p| p.1 == *b))
        .map(|b| perturbed.branches[b].branch.index_j)
        .collect();
    Ok(PerturbationComparison {
        outcome: ComparisonOutcome::Compared,
        merged_perturbation: merged,
        baseline,
        perturbed: Some(perturbed),
        shifts,
        unmatched_baseline,
        unmatched_perturbed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::stationary_branches;
    use crate::units::UnitSystem;

    fn accepted(spec: &OscillatorSpec) -> Branch {
        stationary_branches(spec).unwrap().into_iter().find(|b| b.accepted).unwrap()
    }

    #[test]
    fn harmonic_sensitivity_closed_form() {
        let spec = OscillatorSpec::harmonic(UnitSystem::reduced());
        let r = sensitivity(&spec, &accepted(&spec), 2).unwrap();
        assert!((r.d_dpmin_d_aprime - 0.5).abs() < 1e-14);
        assert!((r.fd_check - 0.5).abs() < 1e-8);
    }

    #[test]
    fn cubic_sensitivity_matches_reference() {
        // 3 / P'(r) and 2 r / P'(r) at the mpmath root
        let spec = OscillatorSpec::reduced(&[0.5, -0.02]).unwrap();
        let b = accepted(&spec);
        let r3 = sensitivity(&spec, &b, 3).unwrap();
        assert!((r3.d_dpmin_d_aprime - 0.811_853_894_755_159_7).abs() < 1e-12);
        assert!((r3.d_dpmin_d_aprime - r3.fd_check).abs() / r3.fd_check.abs().max(1.0) < 1e-6);
        let r2 = sensitivity(&spec, &b, 2).unwrap();
        assert!((r2.d_dpmin_d_aprime - 0.532_793_245_306_626_8).abs() < 1e-12);
    }

    #[test]
    fn fold_is_degenerate() {
        // bisection on a'_3 for the collision of the two positive roots of p^5 - p - 3 a'_3
        let (mut lo, mut hi) = (-0.5_f64, -0.02_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let n = find_positive_real_roots(&build_polynomial(&OscillatorSpec::reduced(&[0.5, mid]).unwrap()))
                .unwrap()
                .len();
            if n >= 1 {
                hi = mid
            } else {
                lo = mid
            }
        }
        assert!((hi + 0.178_330_747_993_712_5).abs() < 1e-9, "{hi}");
        let spec = OscillatorSpec::reduced(&[0.5, hi]).unwrap();
        let roots = find_positive_real_roots(&build_polynomial(&spec)).unwrap();
        let b = Branch {
            dp_min: roots[0],
            index_j: 1,
            second_derivative: 0.0,
            convergence_ratios: vec![],
            accepted: true,
            rejection_reason: None,
        };
        assert_eq!(sensitivity(&spec, &b, 3), Err(Error::DegenerateStationaryPoint));
    }

    #[test]
    fn identity_residual_is_second_order() {
        let spec = OscillatorSpec::reduced(&[0.5, -0.02, -0.001]).unwrap();
        let b = accepted(&spec);
        for i in 2..=4 {
            let d = 1e-3 * spec.effective(i).abs();
            let r1 = identity_residual(&spec, &b, i, d).unwrap().abs();
            let r2 = identity_residual(&spec, &b, i, d / 2.0).unwrap().abs();
            assert!(r1 / r2 > 3.5, "i={i}: {r1} {r2}");
        }
    }

    #[test]
    fn harmonic_sweep_has_no_events() {
        let spec = OscillatorSpec::harmonic(UnitSystem::reduced());
        let t = sweep(&spec, 2, 0.4, 0.6, 21).unwrap();
        assert!(t.events.is_empty() && t.instability_flags.is_empty());
        for s in &t.steps {
            assert_eq!(s.branches.len(), 1);
            assert_eq!(s.branches[0].track, 1);
            assert!((s.branches[0].dp_min - (2.0 * s.value).powf(0.25)).abs() < 1e-14);
        }
    }

    #[test]
    fn cubic_sweep_flips_then_dies() {
        let spec = OscillatorSpec::reduced(&[0.5, -0.02]).unwrap();
        let t = sweep(&spec, 3, -0.02, -0.25, 47).unwrap();
        let flip = t.events_of(EventKind::FilterFlip).next().expect("filter flip");
        let died = t.events_of(EventKind::BranchDied).next().expect("branch died");
        assert!(flip.step < died.step);
        // past the fold value -0.17833 nothing survives
        let fold_step = t.values.iter().position(|v| *v < -0.178_330_747_993_712_5).unwrap();
        assert!(died.step <= fold_step);
        assert!(t.steps[fold_step..].iter().all(|s| s.minima == 0));
    }

    #[test]
    fn zero_delta_is_neutral() {
        let spec = OscillatorSpec::reduced(&[0.5, -0.02]).unwrap().with_n_max(4);
        let c = perturbed_compare(&spec, &BTreeMap::from([(3, 0.0)])).unwrap();
        assert_eq!(c.outcome, ComparisonOutcome::Compared);
        assert_eq!(c.perturbed.as_ref().unwrap(), &c.baseline);
        let s = &c.shifts[0];
        assert_eq!((s.d_dp_min, s.d_omega_an, s.omega_shift), (0.0, 0.0, 0));
        assert!(s.level_deltas.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn negative_cubic_perturbation_softens() {
        let spec = OscillatorSpec::harmonic(UnitSystem::reduced()).with_n_max(2);
        let spec = OscillatorSpec::new(*spec.units(), 3, spec.intrinsic_coeffs().clone()).unwrap();
        let c = perturbed_compare(&spec, &BTreeMap::from([(3, -0.01)])).unwrap();
        assert_eq!(c.shifts[0].omega_shift, -1);
        assert!(c.shifts[0].omega_an_perturbed < 1.0);
    }

    #[test]
    fn large_perturbation_destabilizes() {
        let spec = OscillatorSpec::reduced(&[0.5, -0.02]).unwrap();
        let c = perturbed_compare(&spec, &BTreeMap::from([(3, 5.0)])).unwrap();
        assert_eq!(c.outcome, ComparisonOutcome::Destabilized);
        assert!(c.perturbed.is_none());
    }

    #[test]
    fn matching_is_one_to_one() {
        let pairs = match_ranges(&[1.0, 2.0], &[1.05, 1.1, 8.0], Some(MATCH_LOG_WINDOW));
        assert_eq!(pairs, vec![(0, 0)]);
        let pairs = match_ranges(&[1.0, 2.0], &[1.9, 1.1], None);
        assert_eq!(pairs, vec![(0, 1), (1, 0)]);
    }
}
