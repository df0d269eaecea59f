//! Two-mode bosonic conversion model `H = ea*na + eb*nb + g(a^k b†^l + a†^k b^l)`.
//!
//! The crate is split along the lines of the workflow:
//!
//! * [`fock`] builds the truncated product basis, the sparse Hamiltonian and
//!   observables, and initial product states.
//! * [`analytic`] holds the closed-form mean-field results for `l = 1`, `l = 2`
//!   and the small-time series for general `l`.
//! * [`evolve`] propagates states under a time-independent Hamiltonian with a
//!   Lanczos exponential and records observable traces.
//! * [`analysis`] extracts growth rates, scaling exponents and saturation
//!   levels from traces, and certifies truncations.

pub mod analysis;
pub mod analytic;
mod error;
pub mod evolve;
pub mod fock;

pub use error::{Error, Result};
