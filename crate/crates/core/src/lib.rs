//! Density-matrix simulation and training of variational eigensolvers whose
//! unitary circuit is followed by an engineered dissipative channel.
//!
//! Module map:
//! - [`qlinalg`]: dense complex linear algebra and Liouville-space helpers.
//! - [`circuit`]: layered hardware-efficient ansatz and the product-x ansatz.
//! - [`lindblad`]: single-qubit dissipators, channels and spectral analysis.
//! - [`hamiltonian`]: Pauli sums, benchmark Hamiltonians, locality profiles.
//! - [`analytic`]: closed forms for the product-state warm-up problem.
//! - [`training`]: cost, exact gradients and gradient descent.
//! - [`variance`]: Monte-Carlo gradient-variance benchmarks.
//! - [`collision`]: collision-model realization of the dissipative channels.

pub mod error;
pub mod analytic;
pub mod circuit;
pub mod collision;
pub mod hamiltonian;
pub mod lindblad;
pub mod qlinalg;
pub mod training;
pub mod variance;

pub use error::{Error, Result};
