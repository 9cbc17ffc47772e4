//! Allowed momentum ranges, anharmonic frequencies and split level ladders of
//! arbitrary-order anharmonic oscillators.
//!
//! An oscillator is described only through its uncertainty ranges, linked by
//! `dx dp = n hbar`. Its energy as a function of the momentum range,
//!
//! ```text
//! dE(dp) = dp^2 / 2m + sum_{i=2..N} a'_i / dp^i
//! ```
//!
//! is minimized over `dp`. Every admissible minimum is a branch with its own
//! frequency `omega_an`, and each harmonic level splits into one level per branch.
//!
//! ```
//! use anharmonic::{spectrum, OscillatorSpec};
//!
//! let spec = OscillatorSpec::reduced(&[0.5, -0.02]).unwrap().with_n_max(2);
//! let table = spectrum(&spec).unwrap();
//! assert_eq!(table.branches.len(), 1);
//! assert!(table.branches[0].params.omega_an < 1.0);
//! ```

pub mod cli;
pub mod config;
pub mod error;
pub mod model;
pub mod oracle;
pub mod output;
pub mod perturbation;
pub mod roots;
pub mod solver;
pub mod spectrum;
pub mod units;

pub use error::{Error, Result};
pub use model::{apply_n_scaling, build_spec, energy_at, EnergySample, OscillatorSpec, SpecDocument};
pub use oracle::{cross_check, oracle_minima, oracle_minima_default, OracleResult};
pub use perturbation::{perturbed_compare, sensitivity, sweep, SensitivityReport, SweepTrace};
pub use solver::{
    build_polynomial, classify_and_filter, find_positive_real_roots, stationary_branches, Branch,
    RejectionReason, StationarityPolynomial,
};
pub use spectrum::{
    branch_parameters, dimensionless_coefficients, energy_levels, harmonic_reference, solve, spectrum,
    BranchParameters, Solution, SpectrumTable,
};
pub use units::UnitSystem;
