//! Numerical tolerances used across the crate.
//!
//! Two tiers: identities that hold to machine precision after a handful of
//! arithmetic operations are checked at [`EXACT_ALGEBRA_TOL`]; quantities
//! assembled from longer chains (Gram-Schmidt output, distribution sums,
//! completeness of projector families) get the looser
//! [`CONSTRUCTION_TOL`]. All working dimensions are small, so there is no
//! need for anything scale-dependent.

/// Exact-algebra identities: hermiticity, conjugate symmetry, phase fixes.
pub const EXACT_ALGEBRA_TOL: f64 = 1e-12;

/// Accumulated constructions: idempotence, completeness, probability sums.
pub const CONSTRUCTION_TOL: f64 = 1e-9;

/// Gram-Schmidt residual below which a span vector counts as linearly
/// dependent and is dropped.
pub const SPAN_DROP_TOL: f64 = 1e-10;

/// Measurement branches with weight below this are treated as impossible.
pub const ZERO_PROBABILITY_TOL: f64 = 1e-12;

/// Smallest amplitude modulus eligible to anchor the global-phase convention.
pub const PHASE_ANCHOR_TOL: f64 = 1e-10;

/// Probabilities may undershoot zero by at most this much before clamping;
/// anything more negative indicates a logic error rather than float noise.
pub const NEGATIVITY_ALLOWANCE: f64 = 1e-12;

/// Hard cap on Hilbert-space dimension; everything is stored dense.
pub const DIM_LIMIT: usize = 4096;
