//! Oscillator problem definition and direct evaluation of the range-energy function
//!
//! `dE(dp) = dp^2 / 2m + sum_{i=2..N} a'_i / dp^i`
//!
//! Only the ranges `dp` and `dx = n hbar / dp` are modelled; there are no
//! instantaneous positions or momenta anywhere in the crate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::UnitSystem;

pub const DEFAULT_ETA: f64 = 0.1;

/// One oscillator problem: unit system, series order and the coefficients `a'_i`
/// taken at the reference quantum number `n_ref`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorSpec {
    units: UnitSystem,
    order: u32,
    intrinsic_coeffs: BTreeMap<u32, f64>,
    perturbation_coeffs: BTreeMap<u32, f64>,
    n_ref: u32,
    n_max: u32,
    eta: f64,
}

impl OscillatorSpec {
    pub fn new(units: UnitSystem, order: u32, intrinsic: BTreeMap<u32, f64>) -> Result<Self> {
        let spec = Self {
            units,
            order,
            intrinsic_coeffs: intrinsic,
            perturbation_coeffs: BTreeMap::new(),
            n_ref: 1,
            n_max: 0,
            eta: DEFAULT_ETA,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Harmonic oscillator in `units`, quadratic coefficient synthesized at `n_ref = 1`.
    pub fn harmonic(units: UnitSystem) -> Self {
        let a2 = units.harmonic_quadratic_coeff(1);
        Self::new(units, 2, BTreeMap::from([(2, a2)])).expect("harmonic spec is always valid")
    }

    /// Reduced-unit spec from a coefficient list starting at `a'_2`.
    pub fn reduced(coeffs: &[f64]) -> Result<Self> {
        let order = coeffs.len() as u32 + 1;
        let map = coeffs.iter().enumerate().map(|(k, &c)| (k as u32 + 2, c)).collect();
        Self::new(UnitSystem::reduced(), order, map)
    }

    pub fn with_perturbation(mut self, perturbation: BTreeMap<u32, f64>) -> Result<Self> {
        self.perturbation_coeffs = perturbation;
        self.validate()?;
        Ok(self)
    }

    /// Replaces one intrinsic coefficient.
    pub fn with_intrinsic(mut self, index: u32, value: f64) -> Result<Self> {
        self.intrinsic_coeffs.insert(index, value);
        self.validate()?;
        Ok(self)
    }

    pub fn with_n_ref(mut self, n_ref: u32) -> Result<Self> {
        if n_ref == 0 {
            return Err(Error::InvalidParameter {
                name: "n_ref",
                reason: "must be a positive integer".into(),
            });
        }
        self.n_ref = n_ref;
        Ok(self)
    }

    pub fn with_n_max(mut self, n_max: u32) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidParameter {
                name: "eta",
                reason: format!("must be finite and positive, got {eta}"),
            });
        }
        self.eta = eta;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::OrderBelowQuadratic(self.order));
        }
        for (&index, &value) in self.intrinsic_coeffs.iter().chain(&self.perturbation_coeffs) {
            if !(2..=self.order).contains(&index) {
                return Err(Error::CoefficientIndex { index, order: self.order });
            }
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "coeffs",
                    reason: format!("a'_{index} is not finite"),
                });
            }
        }
        let a2 = self.effective(2);
        if a2 <= 0.0 || a2.is_nan() {
            return Err(Error::NonPositiveQuadratic(a2));
        }
        Ok(())
    }

    pub fn units(&self) -> &UnitSystem {
        &self.units
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn intrinsic_coeffs(&self) -> &BTreeMap<u32, f64> {
        &self.intrinsic_coeffs
    }

    pub fn perturbation_coeffs(&self) -> &BTreeMap<u32, f64> {
        &self.perturbation_coeffs
    }

    pub fn n_ref(&self) -> u32 {
        self.n_ref
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Intrinsic plus perturbation coefficient for index `i`; absent keys count as zero.
    pub fn effective(&self, i: u32) -> f64 {
        let a = self.intrinsic_coeffs.get(&i).copied().unwrap_or(0.0);
        match self.perturbation_coeffs.get(&i) {
            Some(p) => a + p,
            None => a,
        }
    }

    /// Effective coefficients indexed by power, `out[i] = a'_i` for `i in 0..=N`
    /// (entries 0 and 1 are always zero).
    pub fn effective_coeffs(&self) -> Vec<f64> {
        (0..=self.order).map(|i| if i < 2 { 0.0 } else { self.effective(i) }).collect()
    }

    /// Stable identifier of the problem, used to tie derived objects back to their spec.
    pub fn fingerprint(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut feed = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(PRIME);
            }
        };
        feed(self.units.hbar().to_bits());
        feed(self.units.mass().to_bits());
        feed(self.units.omega_har().to_bits());
        feed(u64::from(self.order));
        for c in self.effective_coeffs() {
            feed(c.to_bits());
        }
        feed(u64::from(self.n_ref));
        feed(self.eta.to_bits());
        h
    }
}

/// One evaluated point of the energy function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub dp: f64,
    pub n: u32,
    pub value: f64,
}

impl EnergySample {
    /// Position range linked to `dp` through `dx dp = n hbar`.
    pub fn dx(&self, units: &UnitSystem) -> f64 {
        f64::from(self.n) * units.hbar() / self.dp
    }
}

/// Key-value form of an oscillator problem, as it arrives from a config document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    pub order: Option<u32>,
    /// Only `"reduced"` is recognised; it pins hbar = mass = omega_har = 1.
    pub units: Option<String>,
    pub hbar: Option<f64>,
    pub mass: Option<f64>,
    pub omega_har: Option<f64>,
    #[serde(default)]
    pub coeffs: BTreeMap<String, f64>,
    #[serde(default)]
    pub perturbation: BTreeMap<String, f64>,
    pub n_ref: Option<u32>,
    pub n_max: Option<u32>,
    pub eta: Option<f64>,
}

fn parse_index_map(
    name: &'static str,
    raw: &BTreeMap<String, f64>,
    order: u32,
) -> Result<BTreeMap<u32, f64>> {
    raw.iter()
        .map(|(k, &v)| {
            let index: u32 = k.trim().parse().map_err(|_| Error::InvalidParameter {
                name,
                reason: format!("key `{k}` is not a coefficient index"),
            })?;
            if !(2..=order).contains(&index) {
                return Err(Error::CoefficientIndex { index, order });
            }
            Ok((index, v))
        })
        .collect()
}

/// Validates a parsed document and turns it into an [`OscillatorSpec`].
///
/// When `a'_2` is absent it is synthesized from the harmonic frequency as
/// `m (n_ref hbar omega_har)^2 / 2`. When both are given `a'_2` wins and
/// `omega_har` only sets the normalization.
pub fn build_spec(doc: &SpecDocument) -> Result<OscillatorSpec> {
    let order = doc.order.ok_or(Error::InvalidParameter {
        name: "order",
        reason: "missing".into(),
    })?;
    if order < 2 {
        return Err(Error::OrderBelowQuadratic(order));
    }
    let units = match doc.units.as_deref() {
        None => UnitSystem::new(
            doc.hbar.unwrap_or(1.0),
            doc.mass.unwrap_or(1.0),
            doc.omega_har.unwrap_or(1.0),
        )?,
        Some("reduced") => {
            for (name, v) in [("hbar", doc.hbar), ("mass", doc.mass), ("omega_har", doc.omega_har)] {
                if v.is_some_and(|v| v != 1.0) {
                    return Err(Error::InvalidParameter {
                        name,
                        reason: "conflicts with units = \"reduced\"".into(),
                    });
                }
            }
            UnitSystem::reduced()
        }
        Some(other) => {
            return Err(Error::InvalidParameter {
                name: "units",
                reason: format!("unknown unit system `{other}` (expected \"reduced\")"),
            })
        }
    };
    let n_ref = doc.n_ref.unwrap_or(1);
    let mut intrinsic = parse_index_map("coeffs", &doc.coeffs, order)?;
    let perturbation = parse_index_map("perturbation", &doc.perturbation, order)?;
    if let std::collections::btree_map::Entry::Vacant(slot) = intrinsic.entry(2) {
        if doc.omega_har.is_none() && doc.units.is_none() {
            return Err(Error::InvalidParameter {
                name: "coeffs",
                reason: "need a'_2 (coeffs.2) or omega_har to fix the quadratic term".into(),
            });
        }
        slot.insert(units.harmonic_quadratic_coeff(n_ref));
    }
    for i in [3, 4] {
        let a = intrinsic.get(&i).copied().unwrap_or(0.0)
            + perturbation.get(&i).copied().unwrap_or(0.0);
        if a > 0.0 {
            log::warn!("a'_{i} = {a} is positive; lattice oscillators usually carry a negative a'_{i}");
        }
    }
    let mut spec = OscillatorSpec::new(units, order, intrinsic)?
        .with_perturbation(perturbation)?
        .with_n_ref(n_ref)?
        .with_n_max(doc.n_max.unwrap_or(0));
    if let Some(eta) = doc.eta {
        spec = spec.with_eta(eta)?;
    }
    Ok(spec)
}

/// Rescales the coefficients to quantum number `n` following
/// `a'_i(n) = a'_i(n_ref) (n / n_ref)^(i/2 + 1)`. The result has `n_ref = n`.
pub fn apply_n_scaling(spec: &OscillatorSpec, n: u32) -> Result<OscillatorSpec> {
    if n == 0 {
        return Err(Error::Domain("quantum number must be at least 1".into()));
    }
    if n == spec.n_ref {
        return Ok(spec.clone());
    }
    let ratio = f64::from(n) / f64::from(spec.n_ref);
    let scale = |m: &BTreeMap<u32, f64>| -> BTreeMap<u32, f64> {
        m.iter()
            .map(|(&i, &a)| (i, a * ratio.powf(f64::from(i) / 2.0 + 1.0)))
            .collect()
    };
    let mut out = spec.clone();
    out.intrinsic_coeffs = scale(&spec.intrinsic_coeffs);
    out.perturbation_coeffs = scale(&spec.perturbation_coeffs);
    out.n_ref = n;
    Ok(out)
}

/// Evaluates the series with already-merged coefficients (`coeffs[i] = a'_i`).
pub(crate) fn energy_series(coeffs: &[f64], mass: f64, dp: f64) -> f64 {
    let inv = dp.recip();
    let mut pow = inv;
    let mut potential = 0.0;
    for &a in coeffs.iter().skip(2) {
        pow *= inv;
        potential += a * pow;
    }
    dp * dp / (2.0 * mass) + potential
}

/// Un-minimized energy of the range `dp` at quantum number `n`.
///
/// For `n != n_ref` the coefficients are first carried to `n` by [`apply_n_scaling`].
pub fn energy_at(spec: &OscillatorSpec, dp: f64, n: u32) -> Result<f64> {
    if !(dp > 0.0 && dp.is_finite()) {
        return Err(Error::Domain(format!("momentum range must be positive and finite, got {dp}")));
    }
    let scaled;
    let spec = if n == spec.n_ref {
        spec
    } else {
        scaled = apply_n_scaling(spec, n)?;
        &scaled
    };
    Ok(energy_series(&spec.effective_coeffs(), spec.units.mass(), dp))
}

/// [`energy_at`] packaged with its arguments.
pub fn sample(spec: &OscillatorSpec, dp: f64, n: u32) -> Result<EnergySample> {
    Ok(EnergySample { dp, n, value: energy_at(spec, dp, n)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(order: u32) -> SpecDocument {
        SpecDocument { order: Some(order), ..Default::default() }
    }

    #[test]
    fn synthesizes_quadratic_from_omega() {
        let d = SpecDocument {
            omega_har: Some(1.0),
            units: Some("reduced".into()),
            n_ref: Some(1),
            ..doc(2)
        };
        let spec = build_spec(&d).unwrap();
        assert_eq!(spec.effective(2), 0.5);
    }

    #[test]
    fn explicit_quadratic_wins_over_omega() {
        let d = SpecDocument {
            omega_har: Some(3.0),
            coeffs: BTreeMap::from([("2".into(), 0.7)]),
            ..doc(2)
        };
        let spec = build_spec(&d).unwrap();
        assert_eq!(spec.effective(2), 0.7);
        assert_eq!(spec.units().omega_har(), 3.0);
    }

    #[test]
    fn rejects_order_below_quadratic() {
        let err = build_spec(&SpecDocument { omega_har: Some(1.0), ..doc(1) }).unwrap_err();
        assert_eq!(err, Error::OrderBelowQuadratic(1));
        assert!(err.to_string().contains("order below quadratic"));
    }

    #[test]
    fn merges_perturbation_additively() {
        let d = SpecDocument {
            coeffs: BTreeMap::from([("2".into(), 0.5), ("3".into(), -0.02)]),
            perturbation: BTreeMap::from([("3".into(), -0.005)]),
            ..doc(3)
        };
        let spec = build_spec(&d).unwrap();
        assert!((spec.effective(3) + 0.025).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range_index_and_bad_quadratic() {
        let d = SpecDocument {
            coeffs: BTreeMap::from([("2".into(), 0.5), ("5".into(), 0.1)]),
            ..doc(3)
        };
        assert_eq!(build_spec(&d).unwrap_err(), Error::CoefficientIndex { index: 5, order: 3 });
        let d = SpecDocument {
            coeffs: BTreeMap::from([("2".into(), 0.5)]),
            perturbation: BTreeMap::from([("2".into(), -0.6)]),
            ..doc(3)
        };
        assert!(matches!(build_spec(&d).unwrap_err(), Error::NonPositiveQuadratic(_)));
    }

    #[test]
    fn missing_quadratic_source_is_an_error() {
        assert!(build_spec(&doc(3)).is_err());
    }

    #[test]
    fn harmonic_energy_at_unit_range() {
        let spec = OscillatorSpec::harmonic(UnitSystem::reduced());
        assert_eq!(energy_at(&spec, 1.0, 1).unwrap(), 1.0);
        assert!(energy_at(&spec, 0.0, 1).is_err());
        assert!(energy_at(&spec, -1.0, 1).is_err());
    }

    #[test]
    fn free_particle_limit() {
        let spec = OscillatorSpec::reduced(&[0.5, -0.02, -0.001]).unwrap();
        let dp = 1e4;
        let e = energy_at(&spec, dp, 1).unwrap();
        assert!((e / (dp * dp / 2.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cubic_value_near_minimum() {
        // direct evaluation at the point quoted for the cubic fixture
        let spec = OscillatorSpec::reduced(&[0.5, -0.02]).unwrap();
        let e = energy_at(&spec, 0.9846, 1).unwrap();
        assert!((e - 0.979_528_560_888_527_4).abs() < 1e-13, "{e}");
    }

    #[test]
    fn n_scaling_law() {
        let spec = OscillatorSpec::reduced(&[0.5, -0.02]).unwrap();
        assert_eq!(apply_n_scaling(&spec, 1).unwrap(), spec);
        let s4 = apply_n_scaling(&spec, 4).unwrap();
        assert!((s4.effective(2) - 8.0).abs() < 1e-14);
        assert!((s4.effective(3) + 0.64).abs() < 1e-14);
        assert_eq!(s4.n_ref(), 4);
        assert!(apply_n_scaling(&spec, 0).is_err());
    }

    #[test]
    fn energy_at_other_level_uses_scaled_coefficients() {
        let spec = OscillatorSpec::harmonic(UnitSystem::reduced());
        // harmonic minimum at level 3 sits at sqrt(3) with energy 3
        let e = energy_at(&spec, 3f64.sqrt(), 3).unwrap();
        assert!((e - 3.0).abs() < 1e-14);
    }
}
