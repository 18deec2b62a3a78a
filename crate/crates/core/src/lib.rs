//! Variational quantum circuit training with exact sinusoidal line geometry.
//!
//! The crate simulates parameterized circuits on a state vector, expands any
//! single-parameter cross-section of the cost into its exact few-term Fourier
//! form from a constant number of evaluations, and drives multi-agent
//! coordinate descent on top of that. Supporting modules cover Pauli algebra,
//! spin and fermionic model builders, entanglement diagnostics, sparse
//! eigensolving, and unitary synthesis.

pub mod ansatz;
pub mod dense;
pub mod diagnostics;
pub mod evolve;
pub mod landscape;
pub mod models;
pub mod pauli;
pub mod sim;
pub mod synth;

mod error;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
