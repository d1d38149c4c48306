//! Simulation core for adiabatic quantum optimization of the set partition
//! problem.
//!
//! The crate is `no_std` (it needs `alloc`) and does no IO. It covers:
//!
//! - [`partition`]: instances, exact integer residues, the logarithmic cost
//!   spectrum and a brute-force classical oracle.
//! - [`hamiltonian`]: state vectors and matrix-free application of the
//!   transverse-field driver, the diagonal problem Hamiltonian and their
//!   interpolation.
//! - [`evolution`]: time-dependent Schrödinger propagation (split-step in the
//!   Walsh basis, with a reference RK4 integrator).
//! - [`spectral`]: adiabatic eigenvalue curves, level classification and the
//!   minimum gap.
//! - [`dos`]: coarse-grained density of states and the characteristic
//!   function of the residue distribution.
//! - [`experiments`]: the complexity metric, its minimization over the run
//!   time and scaling sweeps over the problem size.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dos;
pub mod eigen;
mod error;
pub mod evolution;
pub mod experiments;
pub mod fwht;
pub mod hamiltonian;
pub mod math;
pub mod partition;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
