//! Stationarity condition of the range-energy function and branch classification.
//!
//! Setting `d(dE)/d(dp) = 0` and multiplying through by `dp^(N+1)` gives the
//! monic polynomial
//!
//! ```text
//! dp^(N+2) - m * sum_{i=2..N} i a'_i dp^(N-i) = 0
//! ```
//!
//! whose positive real roots are the candidate ranges `dp_min`. Each root is
//! classified (true minimum or not) and then screened by the series
//! convergence filter `|a'_{i+1}| / |a'_i dp_min| <= eta`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::OscillatorSpec;
use crate::roots;

/// Second derivatives smaller than this fraction of their term-wise magnitude count as zero.
pub const DEGENERATE_CURVATURE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityPolynomial {
    /// Highest power first; `coefficients[0] == 1`.
    pub coefficients: Vec<f64>,
    pub spec_hash: u64,
}

impl StationarityPolynomial {
    /// Nominal degree `N + 2`.
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Degree after factoring out roots at zero (lower than `N + 2` when `a'_N = 0`).
    pub fn effective_degree(&self) -> usize {
        let trailing_zeros = self.coefficients.iter().rev().take_while(|&&c| c == 0.0).count();
        self.degree() - trailing_zeros
    }

    pub fn eval(&self, x: f64) -> f64 {
        roots::eval(&self.coefficients, x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        roots::eval_with_derivative(&self.coefficients, x).1
    }

    pub fn relative_residual(&self, x: f64) -> f64 {
        roots::relative_residual(&self.coefficients, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionReason {
    MaximumOrSaddle,
    ConvergenceViolation,
    ImaginaryFrequency,
    NonpositiveNormalization,
}

impl RejectionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::MaximumOrSaddle => "maximum_or_saddle",
            Self::ConvergenceViolation => "convergence_violation",
            Self::ImaginaryFrequency => "imaginary_frequency",
            Self::NonpositiveNormalization => "nonpositive_normalization",
        }
    }
}

impl fmt::Display for RejectionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One positive stationary range `dp_min` with its classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub dp_min: f64,
    /// 1-based position among all positive stationary ranges, ascending in `dp_min`.
    pub index_j: u32,
    pub second_derivative: f64,
    /// One ratio per pair of consecutive nonzero coefficients.
    pub convergence_ratios: Vec<f64>,
    pub accepted: bool,
    pub rejection_reason: Option<RejectionReason>,
}

impl Branch {
    pub fn max_convergence_ratio(&self) -> f64 {
        self.convergence_ratios.iter().copied().fold(0.0, f64::max)
    }

    /// True when the range is a minimum of the energy, whether or not it passes the filter.
    pub fn is_minimum(&self) -> bool {
        self.rejection_reason != Some(RejectionReason::MaximumOrSaddle)
    }

    pub(crate) fn reject(&mut self, reason: RejectionReason) {
        self.accepted = false;
        self.rejection_reason = Some(reason);
    }
}

pub fn build_polynomial(spec: &OscillatorSpec) -> StationarityPolynomial {
    let order = spec.order() as usize;
    let mass = spec.units().mass();
    let mut coefficients = vec![0.0; order + 3];
    coefficients[0] = 1.0;
    for i in 2..=order {
        // dp^(N-i) sits at position (N+2) - (N-i) = i + 2
        coefficients[i + 2] = -mass * i as f64 * spec.effective(i as u32);
    }
    StationarityPolynomial { coefficients, spec_hash: spec.fingerprint() }
}

pub fn find_positive_real_roots(poly: &StationarityPolynomial) -> Result<Vec<f64>> {
    roots::positive_real_roots(&poly.coefficients)
}

/// `d^2(dE)/d(dp)^2` and the sum of the magnitudes of its terms.
pub(crate) fn curvature(coeffs: &[f64], mass: f64, dp: f64) -> (f64, f64) {
    let inv = dp.recip();
    let mut pow = inv * inv * inv;
    let mut value = mass.recip();
    let mut magnitude = value;
    for (i, &a) in coeffs.iter().enumerate().skip(2) {
        pow *= inv;
        let term = (i * (i + 1)) as f64 * a * pow;
        value += term;
        magnitude += term.abs();
    }
    (value, magnitude)
}

/// Ratios `|a'_k| / (|a'_i| dp^(k-i))` for consecutive nonzero coefficients `i < k`.
///
/// With a dense series this is `|a'_{i+1}| / |a'_i dp|` for every `i`.
pub(crate) fn convergence_ratios(coeffs: &[f64], dp: f64) -> Vec<f64> {
    let nonzero: Vec<(usize, f64)> =
        coeffs.iter().enumerate().skip(2).filter(|(_, a)| **a != 0.0).map(|(i, &a)| (i, a)).collect();
    nonzero
        .windows(2)
        .map(|w| {
            let (i, ai) = w[0];
            let (k, ak) = w[1];
            ak.abs() / (ai.abs() * dp.powi((k - i) as i32))
        })
        .collect()
}

pub fn classify_and_filter(spec: &OscillatorSpec, roots: &[f64]) -> Vec<Branch> {
    let coeffs = spec.effective_coeffs();
    let mass = spec.units().mass();
    roots
        .iter()
        .enumerate()
        .map(|(k, &dp)| {
            let (second_derivative, magnitude) = curvature(&coeffs, mass, dp);
            let convergence_ratios = convergence_ratios(&coeffs, dp);
            let rejection_reason = if second_derivative <= DEGENERATE_CURVATURE_TOL * magnitude {
                Some(RejectionReason::MaximumOrSaddle)
            } else if convergence_ratios.iter().any(|&r| r > spec.eta()) {
                Some(RejectionReason::ConvergenceViolation)
            } else {
                None
            };
            Branch {
                dp_min: dp,
                index_j: k as u32 + 1,
                second_derivative,
                convergence_ratios,
                accepted: rejection_reason.is_none(),
                rejection_reason,
            }
        })
        .collect()
}

/// Polynomial, roots and classification in one call.
pub fn stationary_branches(spec: &OscillatorSpec) -> Result<Vec<Branch>> {
    let poly = build_polynomial(spec);
    let roots = find_positive_real_roots(&poly)?;
    Ok(classify_and_filter(spec, &roots))
}
