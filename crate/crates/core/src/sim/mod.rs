//! Dense statevector simulation.

pub mod dense;
pub mod position;
mod state;

pub use dense::{evolve_dense, ground_state, DenseHamiltonian, DEFAULT_DENSE_CAP};
pub use position::{
    evolve_position_kinetic, evolve_position_potential, potential_energies, quartic,
    PositionRegister,
};
pub use state::{swap_test_estimate, BasisSampler, MeasurementRecord, StateVector};
