//! Statevector laboratory for variational ground-state methods: Pauli
//! algebra, molecular Hamiltonian mappings, UCCSD and adaptive ansatzes,
//! readout/gate error mitigation and entanglement forging.

pub mod adapt;
pub mod ansatz;
pub mod bundled;
pub mod circuit;
pub mod error;
pub mod fermion;
pub mod forging;
pub mod mitigation;
pub mod optim;
pub mod pauli;
pub mod record;
pub mod state;
pub mod vqe;

pub use error::{Error, Result};
