//! Molecular instances shipped with the crate (sto-3g integrals plus the
//! CASCI reference energies recorded when they were generated).

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fermion::{
    parse_fcidump, qubit_problem, ActiveSpaceSpec, MappingKind, MolecularIntegrals, QubitProblem,
};

const MANIFEST: &str = include_str!("../data/manifest.json");

const FCIDUMPS: [(&str, &str); 3] = [
    ("h2", include_str!("../data/h2.fcidump")),
    ("lih", include_str!("../data/lih.fcidump")),
    ("beh2", include_str!("../data/beh2.fcidump")),
];

#[derive(Clone, Debug, Deserialize)]
pub struct MoleculeInfo {
    pub geometry: String,
    pub n_orbitals: usize,
    pub n_electrons: usize,
    pub hf_energy: f64,
    pub nuclear_repulsion: f64,
}

#[derive(Clone, Debug, Deserialize)]
pub struct ActiveSpaceInfo {
    pub molecule: String,
    pub frozen: Vec<usize>,
    pub active: Vec<usize>,
    pub active_electrons: usize,
    /// Exact energy within the active space, core and nuclear terms included.
    pub casci_energy: f64,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Manifest {
    pub basis: String,
    pub molecules: BTreeMap<String, MoleculeInfo>,
    pub active_spaces: BTreeMap<String, ActiveSpaceInfo>,
}

pub fn manifest() -> Manifest {
    serde_json::from_str(MANIFEST).expect("bundled manifest is valid JSON")
}

/// Raw FCIDUMP text of a bundled molecule.
pub fn fcidump_text(molecule: &str) -> Result<&'static str> {
    FCIDUMPS
        .iter()
        .find(|(name, _)| *name == molecule)
        .map(|(_, text)| *text)
        .ok_or_else(|| Error::invalid(format!("unknown bundled molecule {molecule:?}")))
}

pub fn integrals(molecule: &str) -> Result<MolecularIntegrals> {
    parse_fcidump(fcidump_text(molecule)?)
}

/// Names of the bundled active-space instances.
pub fn instance_names() -> Vec<String> {
    manifest().active_spaces.into_keys().collect()
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub integrals: MolecularIntegrals,
    pub active_space: ActiveSpaceSpec,
    pub reference_energy: f64,
}

impl Instance {
    pub fn problem(&self, kind: MappingKind) -> Result<QubitProblem> {
        qubit_problem(&self.integrals, Some(&self.active_space), kind)
    }
}

/// `h2`, `lih`, `beh2`, `beh2_sub2` or `beh2_sub4`.
pub fn instance(name: &str) -> Result<Instance> {
    let m = manifest();
    let info = m
        .active_spaces
        .get(name)
        .ok_or_else(|| Error::invalid(format!("unknown bundled instance {name:?}")))?;
    Ok(Instance {
        name: name.to_string(),
        integrals: integrals(&info.molecule)?,
        active_space: ActiveSpaceSpec {
            frozen_occupied: info.frozen.clone(),
            active: info.active.clone(),
            n_active_electrons: Some(info.active_electrons),
        },
        reference_energy: info.casci_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_instance_loads() {
        for name in instance_names() {
            let inst = instance(&name).unwrap();
            inst.active_space.validate(&inst.integrals).unwrap();
        }
        assert!(instance("water").is_err());
    }

    #[test]
    fn hf_energies_match_manifest() {
        for (name, info) in manifest().molecules {
            let ints = integrals(&name).unwrap();
            assert_eq!(ints.n_spatial(), info.n_orbitals);
            assert!(
                (ints.hartree_fock_energy() - info.hf_energy).abs() < 1e-9,
                "{name}"
            );
        }
    }
}
