//! Optimal laser control of two-level quantum systems.
//!
//! The crate simulates resonant two-level dynamics in the rotating wave
//! approximation, evaluates control-fitness functionals on the resulting
//! trajectories, constructs the analytic optimal pulse envelopes (the sech
//! soliton for loss minimization and the constant-amplitude pi/2 pulse for
//! population inversion at a fixed control time), and cross-checks them by
//! direct energy-constrained numerical pulse optimization.
//!
//! All quantities are in atomic units (hbar = 1). The crate is `no_std`
//! (alloc required); file formats and the command-line front end live in the
//! companion `pulseopt-cli` crate.

#![cfg_attr(not(test), no_std)]
// validation guards are written `!(x > 0.0)` on purpose: NaN must fail them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dynamics;
mod error;
pub mod fitness;
pub mod model;
pub mod morse;
pub mod optimizer;
pub mod pulses;
pub mod variational;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
