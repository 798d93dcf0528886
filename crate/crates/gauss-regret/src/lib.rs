//! Minimax log-loss regret, redundancy, and metric complexity of bounded
//! constraint sets in `R^n` under unit-variance Gaussian noise.
//!
//! The library is organized around a small description language for bounded
//! sets ([`set::SetSpec`]) equipped with distance and support oracles, and
//! computes three families of quantities on top of it:
//!
//! * **Regret** ([`regret`]): the minimax regret of sequential probability
//!   assignment against Gaussian location families with means constrained to
//!   the set — equivalently the log of the set's Gaussian-smoothed volume
//!   (Wills functional) at noise scale `√2π`. Closed forms where available,
//!   deterministic tensor-grid quadrature in low dimension, and seeded
//!   log-domain Monte Carlo elsewhere.
//! * **Intrinsic volumes** ([`volumes`]): exact sequences for balls and boxes,
//!   Monte Carlo estimates via random projections for ellipsoids and polytope
//!   hulls, Steiner parallel volumes, and the regret closed form
//!   `log Σ_j V_j(K/√2π)`.
//! * **Metric complexity** ([`complexity`]): global and local Gaussian widths,
//!   greedy covering/packing numbers, entropy numbers, the width and covering
//!   fixed points, and the infimum forms that characterize regret and
//!   redundancy up to universal constants.
//!
//! The statistical face of the same functionals lives in [`coding`]:
//! normalized-maximum-likelihood, Gaussian, and finite-mixture predictors with
//! sequential conditionals, per-sequence regret, and redundancy (KL) bounds.
//! [`harness`] runs randomized, error-budget-aware property suites over all of
//! the above and renders verdict reports.
//!
//! All losses, regrets, and entropies are in nats. All randomized routines
//! take explicit seeds and are bit-reproducible for a fixed configuration
//! regardless of thread scheduling; see [`rng`] for the sub-seed derivation
//! scheme.

#![forbid(unsafe_code)]

pub mod coding;
pub mod complexity;
pub mod harness;
pub mod io;
pub mod num;
pub mod regret;
pub mod rng;
pub mod set;
pub mod volumes;

mod quadrature;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, Error)]
#[non_exhaustive]
pub enum Error {
    /// A vector or spec did not have the expected dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// A spec violates a structural invariant (empty, unbounded, NaN, ...).
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    /// A composite spec outside the supported distance/support cases.
    #[error("unsupported composition: {0}")]
    UnsupportedComposition(String),
    /// The requested operation has no implementation for this input.
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    /// An iterative solver exhausted its budget before reaching tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),
    /// A Monte Carlo run produced a degenerate spread (all batches equal).
    #[error("degenerate Monte Carlo spread: {0}")]
    DegenerateSpread(String),
    /// Malformed textual input (JSON spec file or CSV sequence file).
    #[error("parse error: {0}")]
    Parse(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
