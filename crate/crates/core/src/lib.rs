//! Simulator and verification toolkit for quantum measurement statistics on
//! pre- and post-selected ensembles, built around the N-box paradox.
//!
//! The paradox: prepare N+1 "boxes" in a uniform superposition, post-select
//! on a final state that weights the last box by -(N-1), open any single
//! box i ≤ N in between — and, conditioned on post-selection, the record is
//! in box i with certainty. Whether that certainty survives depends on how
//! the degenerate "not in box i" outcome updates the state:
//!
//! * pure Lüders projection (the unopened boxes are indistinguishable)
//!   keeps the certainty;
//! * a classical probability-weighted mixture over the box basis (the
//!   unopened boxes are distinguishable records) reduces it to
//!   1/(N² - N + 1).
//!
//! The crate provides the linear algebra ([`hilbert`]), projective
//! measurements with both update semantics ([`measurement`]),
//! pre/post-selection conditioning ([`pps`]), and the N-box constructors
//! and analyses ([`nbox`]), plus a declarative experiment layer with exact
//! analysis, seeded Monte Carlo sampling, and report emission.

pub mod error;
pub mod experiment;
pub mod hilbert;
pub mod measurement;
pub mod montecarlo;
pub mod nbox;
pub mod pps;
pub mod report;
pub mod tolerances;
pub mod verify;

pub use error::{Error, Result};
