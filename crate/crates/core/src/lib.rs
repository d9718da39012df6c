//! Simulator and analytic toolkit for counterfactual quantum bit commitment.
//!
//! Bob sends single photons into a Michelson-type interferometer whose far arm
//! runs to Alice. Alice gates an optical switch in one of two time bins chosen
//! by her bit; when her bit matches Bob's the interference is broken and the
//! detector pattern leaks partial information about the comparison. Repeating
//! this over `m` parity-constrained sequences of `n` slots yields a bit
//! commitment.
//!
//! The crate is `no_std` (it needs `alloc`) and contains no IO:
//!
//! * [`optics`] — amplitude model of one photon through the interferometer.
//! * [`protocol`] — sequence generation, commit phase, Alice's D2 check and
//!   Bob's opening verification.
//! * [`adversary`] — dishonest behaviours for either party with their closed
//!   form predictions.
//! * [`security`] — binding/concealing bounds, the parameter solver and an
//!   exhaustive concealing oracle.
//! * [`rng`] — seeded substreams so any slot can be replayed in isolation.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adversary;
mod error;
pub mod optics;
pub mod protocol;
pub mod rng;
pub mod security;
pub mod stats;

pub use error::{Error, Result};
