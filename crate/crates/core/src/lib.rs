//! Quantum graph neural networks on a dense statevector simulator.
//!
//! The crate is organized bottom-up:
//!
//! * [`graph`]: weighted graphs, Laplacians, random connected graphs and an
//!   exact isomorphism test.
//! * [`pauli`] and [`sim`]: Pauli-sum operators and the statevector simulator,
//!   including qubit-encoded position registers.
//! * [`hamiltonians`]: the graph Hamiltonians used by the ansatze.
//! * [`ansatz`]: layered Hamiltonian-evolution programs with free, temporal
//!   (recurrent) or spatial (convolutional) parameter tying.
//! * [`optimize`]: finite-difference gradients, Adam and Nelder-Mead.
//! * [`experiments`]: dynamics learning, GHZ preparation, spectral clustering
//!   and graph-isomorphism classification pipelines.

pub mod ansatz;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod hamiltonians;
pub mod optimize;
pub mod pauli;
pub mod rng;
pub mod sim;

pub use error::{QgnnError, Result};
pub use graph::{Graph, Laplacian};
pub use pauli::{Axis, PauliSum, PauliTerm};
pub use sim::StateVector;
