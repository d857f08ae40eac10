//! Numerical analysis of nonuniform exponential stability for linear
//! evolution families U(t,s) on R^n.
//!
//! The crate evaluates propagators from closed-form, matrix-ODE, or
//! tabulated descriptions, computes forward-weighted trajectory
//! envelopes and their sup norms, estimates admissible decay exponents
//! and Lyapunov exponents, measures Datko-type integral conditions,
//! and assembles pointwise-verified decay certificates.
//!
//! The crate is `no_std` (alloc only); all I/O lives in companion
//! crates.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod admissibility;
pub mod cut;
pub mod datko;
pub mod envelope;
pub mod expr;
pub mod family;
pub mod linalg;
pub mod ode;
pub mod rng;
pub mod timefn;

mod error;

pub use error::CoreError;

/// Crate version, for report stamping by downstream tools.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
