//! Simulation core for a quantum mutual-coherence detector.
//!
//! A two-level atomic system (the ground states of a Raman Λ system) is
//! driven by the mutual coherence of two partially coherent optical fields.
//! Coherent control beams null the drive, and the control setting at balance
//! is a direct readout of the mutual coherence `Γ₁₂`. This crate holds the
//! physics and the estimators; it is `#![no_std]` and only needs `alloc`.
//!
//! Modules, bottom-up:
//!
//!  - [`constants`], [`field`]: physical constants, field/atom parameter
//!    records and Gaussian sampling of the thermal field pair.
//!  - [`classical`]: beamsplitter interferometer baseline and its noise floor.
//!  - [`qubit`]: Rabi dynamics (closed form, numeric, three-level oracle).
//!  - [`balance`]: the null-balancing control loop.
//!  - [`budget`]: closed-form noise budget and the enhancement-factor sweep.
//!
//! All angular quantities (frequencies, detunings, Rabi rates) are stored in
//! rad/s. Irradiances and mutual coherences are in W/m².

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod balance;
pub mod budget;
pub mod classical;
pub mod constants;
pub mod error;
pub mod field;
pub mod qubit;
pub mod rng;
pub mod stats;

pub use num_complex::Complex64;

pub use error::{Error, Result};
