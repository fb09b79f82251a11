//! Molecular integrals to qubit Hamiltonians.

mod hamiltonian;
mod integrals;
mod mapping;

pub use hamiltonian::{build_fermion_hamiltonian, FermionHamiltonian};
pub use integrals::{
    apply_active_space, parse_fcidump, render_fcidump, ActiveSpaceSpec, MolecularIntegrals,
};
pub use mapping::{
    hartree_fock_bitstring, jordan_wigner, parity_map_reduced, FermionTerm, Ladder, MappingKind,
    QubitMapping,
};

use crate::error::Result;
use crate::pauli::PauliSum;

/// A mapped molecular problem: qubit Hamiltonian plus the encoding used.
#[derive(Clone, Debug)]
pub struct QubitProblem {
    pub hamiltonian: PauliSum,
    pub mapping: QubitMapping,
    pub n_spatial: usize,
    pub hartree_fock_energy: f64,
}

/// Active-space reduction, spin-orbital assembly and qubit mapping in one go.
pub fn qubit_problem(
    ints: &MolecularIntegrals,
    active: Option<&ActiveSpaceSpec>,
    kind: MappingKind,
) -> Result<QubitProblem> {
    let reduced = match active {
        Some(spec) => apply_active_space(ints, spec)?,
        None => ints.clone(),
    };
    let (n_up, n_down) = reduced.spin_counts();
    let fh = build_fermion_hamiltonian(&reduced);
    let mapping = QubitMapping::new(kind, fh.n_spin_orbitals(), n_up, n_down)?;
    Ok(QubitProblem {
        hamiltonian: mapping.map_hamiltonian(&fh)?,
        mapping,
        n_spatial: reduced.n_spatial(),
        hartree_fock_energy: reduced.hartree_fock_energy(),
    })
}
