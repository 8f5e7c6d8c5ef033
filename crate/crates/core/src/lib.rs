//! Quantum-assisted simulation over a fixed, Pauli-generated basis.
//!
//! The pipeline has three disjoint stages:
//!
//! 1. [`ansatz`]: pick basis states `|ψ_j⟩ = P_j|ψ⟩` (e.g. a cumulative
//!    K-moment expansion of a Hamiltonian's Pauli terms).
//! 2. [`overlap`]: measure overlap matrices `⟨ψ_i|O|ψ_j⟩`. Every entry reduces
//!    to a phase times the expectation of one Hermitian Pauli string on the
//!    reference state, computed exactly or from simulated shots.
//! 3. [`dynamics`]: integrate the coefficient equations classically, with no
//!    further access to the quantum states.
//!
//! [`oracle`] holds dense brute-force references used to validate the
//! pipeline, and [`models`] the concrete Hamiltonians and dissipators.

extern crate blas_src;

pub mod ansatz;
pub mod dynamics;
pub mod error;
pub mod hybrid;
pub mod linalg;
pub mod models;
pub mod oracle;
pub mod overlap;
pub mod pauli;
pub mod statevector;

pub use error::{Error, Result};
pub use num_complex::Complex64;
