use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Action, mass and harmonic angular frequency of one oscillator problem.
///
/// Every other scale is derived: momenta are measured against
/// `sqrt(mass * hbar * omega_har)` and energies against `hbar * omega_har`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    hbar: f64,
    mass: f64,
    omega_har: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self::reduced()
    }
}

impl UnitSystem {
    pub fn new(hbar: f64, mass: f64, omega_har: f64) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("mass", mass), ("omega_har", omega_har)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and strictly positive, got {v}"),
                });
            }
        }
        Ok(Self { hbar, mass, omega_har })
    }

    /// hbar = mass = omega_har = 1.
    pub const fn reduced() -> Self {
        Self { hbar: 1.0, mass: 1.0, omega_har: 1.0 }
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn omega_har(&self) -> f64 {
        self.omega_har
    }

    /// Harmonic force constant `m * omega_har^2`.
    pub fn k_har(&self) -> f64 {
        self.mass * self.omega_har * self.omega_har
    }

    pub fn momentum_scale(&self) -> f64 {
        (self.mass * self.hbar * self.omega_har).sqrt()
    }

    pub fn energy_scale(&self) -> f64 {
        self.hbar * self.omega_har
    }

    /// Harmonic momentum range `sqrt(m n hbar omega_har)` at level `n`.
    pub fn harmonic_dp(&self, n: u32) -> f64 {
        (self.mass * f64::from(n) * self.hbar * self.omega_har).sqrt()
    }

    /// Harmonic level gap `n hbar omega_har`.
    pub fn harmonic_gap(&self, n: u32) -> f64 {
        f64::from(n) * self.hbar * self.omega_har
    }

    /// Quadratic coefficient `m (n hbar omega_har)^2 / 2` of the harmonic energy function.
    pub fn harmonic_quadratic_coeff(&self, n: u32) -> f64 {
        let x = f64::from(n) * self.hbar * self.omega_har;
        0.5 * self.mass * x * x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_is_default() {
        let u = UnitSystem::default();
        assert_eq!((u.hbar(), u.mass(), u.omega_har()), (1.0, 1.0, 1.0));
        assert_eq!(u.k_har(), 1.0);
        assert_eq!(u.harmonic_quadratic_coeff(1), 0.5);
    }

    #[test]
    fn rejects_nonpositive_fields() {
        assert!(UnitSystem::new(0.0, 1.0, 1.0).is_err());
        assert!(UnitSystem::new(1.0, -2.0, 1.0).is_err());
        assert!(UnitSystem::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn derived_scales() {
        let u = UnitSystem::new(2.0, 3.0, 5.0).unwrap();
        assert_eq!(u.k_har(), 75.0);
        assert!((u.momentum_scale() - 30f64.sqrt()).abs() < 1e-14);
        assert_eq!(u.energy_scale(), 10.0);
        assert!((u.harmonic_dp(4) - 120f64.sqrt()).abs() < 1e-13);
    }
}
