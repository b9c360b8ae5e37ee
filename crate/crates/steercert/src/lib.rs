//! Steering-based certification of pure two-qubit entangled states.
//!
//! The crate simulates, entirely in software, a one-sided device-independent
//! self-testing protocol built on a fine-grained steering inequality (FGSI):
//!
//! - [`qlinalg`] — complex Hermitian linear algebra over dimensions 2 and 4;
//! - [`states`] — the canonical pure-state families and entanglement quantities;
//! - [`measurements`] — dichotomic observables, projectors, probabilities,
//!   assemblages, and wave-plate unitaries;
//! - [`steering`] — FGSI evaluation/maximization and certification of the
//!   state and the untrusted party's measurements from statistics alone;
//! - [`robustness`] — the self-testing robustness bound, the operator
//!   inequality verification machinery, and a channel-search extractability
//!   estimator;
//! - [`labsim`] — simulated coincidence counting, tomography, Monte Carlo
//!   error bars, and no-signaling hypothesis tests.
//!
//! All values are immutable after construction and every operation is a pure
//! function; grid sweeps and Monte Carlo repetitions parallelize with
//! deterministic merges.

pub mod labsim;
pub mod measurements;
pub mod qlinalg;
pub mod robustness;
pub mod states;
pub mod steering;

use thiserror::Error;

/// Maximum allowed deviation from Hermiticity, `max |M - M†|`.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Eigenvalues above `-PSD_TOL` count as non-negative.
pub const PSD_TOL: f64 = 1e-9;
/// Maximum allowed deviation of a density-matrix trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Maximum allowed deviation of a pure-state norm from one.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Maximum allowed deviation from unitarity, `max |U†U - 1|`.
pub const UNITARITY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("unsupported dimension {0} (only 2 and 4)")]
    UnsupportedDimension(usize),
    #[error("non-finite entry (NaN or infinity)")]
    NonFinite,
    #[error("matrix is not Hermitian (max |M - M†| = {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositiveSemidefinite(f64),
    #[error("trace is not one (got {0})")]
    TraceNotOne(f64),
    #[error("state vector is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("matrix is not unitary (max |U†U - 1| = {0:.3e})")]
    NotUnitary(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("setting pair ({0},{1}) is not populated")]
    MissingSettingPair(usize, usize),
    #[error("Alice marginal p({1}|A_{0}) = {2:.3e} vanishes; conditional undefined")]
    VanishingMarginal(usize, u8, f64),
    #[error("statistics are not steerable: S = {s:.6} does not exceed the LHS bound {bound:.6}")]
    NotSteerable { s: f64, bound: f64 },
    #[error("inconsistent statistics: {0}")]
    InconsistentStatistics(String),
    #[error("missing tomography settings: {0}")]
    MissingSettings(String),
    #[error("internal self-check failed: {0}")]
    SelfCheckFailed(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
