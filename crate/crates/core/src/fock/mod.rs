//! Truncated two-mode Fock space: basis, operators and initial states.

mod basis;
mod operator;
mod params;
mod state;

pub use basis::{enumerate_basis, ModeTruncation, ProductBasis};
pub use operator::{
    build_hamiltonian, build_observables, hamiltonian_with_diagnostics, BoundaryLeak,
    ObservableSet, OperatorMatrix,
};
pub use params::ModelParams;
pub use state::{
    coherent_state, product_initial_state, ModeA, InitialStateSpec, StateVector,
    COHERENT_TAIL_LIMIT,
};
