//! Numerical core for coupled stochastic systems driven by Lévy noise.
//!
//! The library simulates a ring of `N` diffusively coupled components
//!
//! ```text
//! dX^(j) = f^(j)(X^(j)) dt + c_j dL^(j),   j = 1..N  (cyclic indices)
//! ```
//!
//! with one-sided dissipative drifts and additive two-sided Lévy noise, and
//! provides the machinery to verify its synchronization behaviour on sampled
//! paths:
//!
//! * [`levy_process`] — two-sided càdlàg sample paths (Brownian, compound
//!   Poisson, symmetric alpha-stable), shift maps and exponentially weighted
//!   pathwise integrals;
//! * [`ou_stationary`] — stationary Ornstein-Uhlenbeck convolutions
//!   `X̄_t = c e^{-t} ∫_{-∞}^t e^s dL_s` and Langevin residual checks;
//! * [`coupled_system`] — the drift library, the pathwise random ODE on the
//!   ring, the equivalent stochastic ODE and the transform-consistency check;
//! * [`bounds`] — the comparison matrices of the synchronization estimates,
//!   closed-form spectra against a dense symmetric eigensolver, and the
//!   componentwise comparison (Gronwall-type) inequality on instances;
//! * [`attractor`] — pullback fixed-point estimates, absorbing radii and the
//!   stationary-orbit property;
//! * [`averaged`] — the mean-field system obtained in the strong-coupling
//!   limit and its attractor;
//! * [`analysis`] — decay curves, component spreads, coupling sweeps, an
//!   approximate Skorohod J1 distance and related diagnostics;
//! * [`verify`] — the self-contained verification suite run by the CLI.
//!
//! The crate is `no_std` (with `alloc`); all I/O lives in the companion CLI
//! crate. Every construction is a pure function of its inputs and a 64-bit
//! seed, so identical inputs reproduce identical results bit for bit.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod attractor;
pub mod averaged;
pub mod bounds;
pub mod coupled_system;
mod error;
pub mod grid;
pub mod levy_process;
pub mod linalg;
pub(crate) mod math;
pub mod ou_stationary;
pub mod rng;
pub mod verify;

pub use error::SimError;

/// Crate-wide result type.
pub type Result<T> = core::result::Result<T, SimError>;
