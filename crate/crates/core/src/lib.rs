//! Geometric phases of cyclic quantum evolution under time-independent
//! Hamiltonians.
//!
//! A pure state evolving under a fixed Hamiltonian returns to its initial
//! ray exactly when every energy gap inside its support is a rational
//! multiple of every other.  When that happens the period, the total phase
//! and the geometric phase of the cycle are all fixed by exact integer
//! data: the least common multiple of the inverse gaps and the integer
//! ladder `p_i` it induces on the supported levels.  This crate computes
//! that data exactly and verifies every closed form against an independent
//! numerical propagation.
//!
//! Module map:
//! - [`rational`]: exact fraction arithmetic, rational LCM, float
//!   rationalization by continued fractions, squarefree parts;
//! - [`linalg`]: dense complex vectors/matrices and a cyclic Jacobi
//!   eigensolver for Hermitian input;
//! - [`spectral`]: spectra as rational multiples of a base energy unit,
//!   energy moments, commensurability analysis;
//! - [`cyclic`]: support decomposition, period and phase analysis, the
//!   integer `p` ladder, selection rules for attainable phases;
//! - [`operators`]: the geometric operator, its statistics, time operator
//!   expectations and commutator checks;
//! - [`dynamics`]: exact spectral and RK4 propagation, Fubini-Study
//!   lengths, phase ledgers, period detection;
//! - [`scenario`] / [`report`] / [`verify`]: input files, human-readable
//!   analysis reports and the self-checking verification suite.
//!
//! Conventions used throughout: `ħ` is configurable and defaults to 1;
//! phases are reported in radians; the gauge for shifted Hamiltonians is
//! the minimum supported eigenvalue, which makes every `p_i` a
//! non-negative integer and the winding of the lowest level zero.

#![forbid(unsafe_code)]

pub mod cyclic;
pub mod dynamics;
pub mod linalg;
pub mod operators;
pub mod par;
pub mod rational;
pub mod report;
pub mod scenario;
pub mod spectral;
pub mod verify;

mod error;

pub use error::{Error, Result};

/// Crate-wide defaults, kept in one place so the documentation, the
/// scenario parser and the test suite cannot drift apart.
pub mod defaults {
    /// Reduced Planck constant.
    pub const HBAR: f64 = 1.0;
    /// Probability below which a level is treated as unoccupied.
    pub const EPS_SUPPORT: f64 = 1e-12;
    /// Largest denominator considered when rationalizing floats.
    pub const MAX_DENOMINATOR: u64 = 1_000_000;
    /// Absolute residual below which a rationalization counts as exact.
    pub const RAT_TOL: f64 = 1e-9;
    /// Relative eigenvalue separation below which levels merge.
    pub const DEG_TOL: f64 = 1e-10;
    /// Relative asymmetry tolerated before a matrix is rejected as
    /// non-Hermitian.
    pub const HERM_TOL: f64 = 1e-10;
    /// Time samples per period for trajectory construction.
    pub const SAMPLES_PER_PERIOD: usize = 2048;
    /// Return-fidelity threshold used by cycle detection.
    pub const FIDELITY_TOL: f64 = 1e-6;
    /// Largest Hilbert-space dimension accepted by the dense solver.
    pub const MAX_DIM: usize = 64;
}
