//! Positive real roots of real polynomials.
//!
//! All complex roots come from the eigenvalues of the companion matrix of the
//! rescaled monic polynomial; real candidates are then Newton-polished on the
//! rescaled polynomial and mapped back. Coefficients are stored highest power
//! first throughout.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

/// Largest allowed ratio between nonzero coefficient magnitudes after rescaling.
pub const MAX_COEFF_SPREAD: f64 = 1e12;
/// Relative residual a polished root must reach.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-12;
/// Roots closer than this (relative) are the same root.
pub const DUPLICATE_TOL: f64 = 1e-9;
/// Widest relative gap that can still be a numerically split multiple root.
const MULTIPLE_ROOT_GAP: f64 = 1e-6;

const IMAG_TOL: f64 = 1e-4;

/// Horner evaluation of the polynomial and its derivative.
pub fn eval_with_derivative(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &c in coeffs {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// `|p(x)| / max(1, |x|^d)` for a monic polynomial of degree `d`.
pub fn relative_residual(coeffs: &[f64], x: f64) -> f64 {
    let degree = coeffs.len().saturating_sub(1) as i32;
    eval(coeffs, x).abs() / x.abs().powi(degree).max(1.0)
}

/// Monic polynomial in `y = x / scale`, with the scale chosen so every
/// coefficient has magnitude at most one.
struct Normalized {
    scale: f64,
    coeffs: Vec<f64>,
}

fn normalize(coeffs: &[f64]) -> Result<Normalized> {
    let lead = coeffs[0];
    let degree = coeffs.len() - 1;
    let scale = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, c)| **c != 0.0)
        .map(|(k, c)| (c / lead).abs().powf(1.0 / k as f64))
        .fold(0.0_f64, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let scaled: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c / lead / scale.powi(k as i32))
        .collect();
    let (lo, hi) = scaled
        .iter()
        .filter(|c| **c != 0.0)
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), c| (lo.min(c.abs()), hi.max(c.abs())));
    let spread = hi / lo;
    if spread > MAX_COEFF_SPREAD {
        return Err(Error::IllConditioned { spread });
    }
    debug_assert_eq!(scaled.len(), degree + 1);
    Ok(Normalized { scale, coeffs: scaled })
}

fn newton_polish(coeffs: &[f64], mut x: f64) -> f64 {
    let mut best = (relative_residual(coeffs, x), x);
    for _ in 0..100 {
        let (p, dp) = eval_with_derivative(coeffs, x);
        if p == 0.0 || dp == 0.0 || !dp.is_finite() {
            break;
        }
        let step = p / dp;
        x -= step;
        let r = relative_residual(coeffs, x);
        if r < best.0 {
            best = (r, x);
        }
        if step.abs() <= 4.0 * f64::EPSILON * x.abs() {
            break;
        }
    }
    best.1
}

/// Aberth-Ehrlich simultaneous iteration on a monic polynomial whose
/// coefficients are bounded by one (all roots then lie in |z| < 2).
fn aberth_roots(monic: &[f64]) -> Result<Vec<(f64, f64)>> {
    let d = monic.len() - 1;
    // starting points on a circle, rotated off the real axis
    let mut z: Vec<Complex<f64>> = (0..d)
        .map(|k| Complex::from_polar(1.0, (2.0 * std::f64::consts::PI * k as f64 + 0.4) / d as f64))
        .collect();
    let eval = |x: Complex<f64>| {
        let mut p = Complex::new(0.0, 0.0);
        let mut dp = Complex::new(0.0, 0.0);
        for &c in monic {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    };
    for _ in 0..500 {
        let mut moved = 0.0_f64;
        for k in 0..d {
            let (p, dp) = eval(z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex<f64> =
                (0..d).filter(|&m| m != k).map(|m| (z[k] - z[m]).inv()).sum();
            let step = ratio / (Complex::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[k] -= step;
                moved = moved.max(step.norm() / z[k].norm().max(1e-300));
            }
        }
        if moved <= 4.0 * f64::EPSILON {
            return Ok(z.iter().map(|c| (c.re, c.im)).collect());
        }
    }
    Err(Error::EigenSolver)
}

/// Complex roots of the monic polynomial, as (re, im) pairs.
///
/// Francis QR can stall on companion matrices that are nearly orthogonal
/// (`x^d + 1` and friends); those fall back to Aberth iteration.
fn companion_eigenvalues(monic: &[f64]) -> Result<Vec<(f64, f64)>> {
    let d = monic.len() - 1;
    if d == 1 {
        return Ok(vec![(-monic[1], 0.0)]);
    }
    let mut m = DMatrix::<f64>::zeros(d, d);
    for i in 1..d {
        m[(i, i - 1)] = 1.0;
    }
    for k in 0..d {
        // last column holds -a_0 .. -a_{d-1} from top to bottom
        m[(k, d - 1)] = -monic[d - k];
    }
    match nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 10_000) {
        Some(schur) => Ok(schur.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect()),
        None => aberth_roots(monic),
    }
}

/// All strictly positive real roots, ascending, duplicates collapsed.
///
/// Zero roots (trailing zero coefficients) are factored out first, so the
/// effective degree may be lower than the nominal one. An empty vector is a
/// normal result.
pub fn positive_real_roots(coeffs: &[f64]) -> Result<Vec<f64>> {
    let first = coeffs.iter().position(|&c| c != 0.0);
    let Some(first) = first else {
        return Err(Error::Domain("zero polynomial".into()));
    };
    let last = coeffs.iter().rposition(|&c| c != 0.0).unwrap();
    let trimmed = &coeffs[first..=last];
    if trimmed.len() < 2 {
        return Ok(Vec::new());
    }
    if trimmed.iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain("non-finite polynomial coefficient".into()));
    }
    let norm = normalize(trimmed)?;
    let eig = companion_eigenvalues(&norm.coeffs)?;

    let mut roots: Vec<f64> = eig
        .into_iter()
        .filter(|&(re, im)| re > 0.0 && im.abs() <= IMAG_TOL * re.hypot(im))
        .map(|(re, _)| newton_polish(&norm.coeffs, re))
        .filter(|&y| y > 0.0 && relative_residual(&norm.coeffs, y) <= ROOT_RESIDUAL_TOL)
        .map(|y| y * norm.scale)
        .collect();
    roots.sort_by(f64::total_cmp);
    // a multiple root comes back as a cluster of nearby candidates; the
    // polynomial stays at residual level across the whole cluster
    let mut merged: Vec<Vec<f64>> = Vec::new();
    for r in roots {
        if let Some(cluster) = merged.last_mut() {
            let prev = *cluster.last().unwrap();
            let gap = (r - prev).abs() / r.abs().max(prev.abs());
            let mid = 0.5 * (r + prev) / norm.scale;
            if gap <= DUPLICATE_TOL
                || (gap <= MULTIPLE_ROOT_GAP && relative_residual(&norm.coeffs, mid) <= ROOT_RESIDUAL_TOL)
            {
                cluster.push(r);
                continue;
            }
        }
        merged.push(vec![r]);
    }
    Ok(merged.iter().map(|c| c.iter().sum::<f64>() / c.len() as f64).collect())
}

/// Number of sign changes among the nonzero coefficients (Descartes' bound).
pub fn sign_changes(coeffs: &[f64]) -> usize {
    let signs: Vec<bool> = coeffs.iter().filter(|&&c| c != 0.0).map(|&c| c > 0.0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}
