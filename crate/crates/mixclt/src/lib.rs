//! Simulation and Monte Carlo verification of martingale limit laws whose
//! limits are Brownian motions run at independent random clocks.
//!
//! The crate is organised around five layers: exact lattice combinatorics of
//! the occupation-time martingale ([`lattice`]), process simulators and
//! their rescaled statistics ([`paths`]), power-variation estimators and
//! volatility schemes ([`powervar`]), exact samplers for the limit laws
//! ([`limitlaw`]), and the replication engine that turns each limit theorem
//! into a pass/fail experiment ([`mcstat`]). The [`cli`] module wires them
//! to the `mixclt` binary.

pub mod cli;
pub mod error;
pub mod lattice;
pub mod limitlaw;
pub mod mcstat;
pub mod paths;
pub mod powervar;
pub mod rng;

pub use error::{Error, Result};
