//! Spin-conserving UCCSD excitation pools, their circuit compilation and
//! the two-qubit cost model.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::ParamCircuit;
use crate::error::{Error, Result};
use crate::fermion::{FermionTerm, Ladder, QubitMapping};
use crate::pauli::{PauliSum, IMAG_TOLERANCE};

/// Two-qubit cost of one compiled double excitation.
pub const DOUBLE_CNOTS: usize = 13;
/// Two-qubit cost of one compiled single excitation.
pub const SINGLE_CNOTS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

/// Which electrons move. Indices are spin-orbital modes in blocked order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Excitation {
    /// `a†_a a_i`.
    Single {
        occupied: usize,
        #[serde(rename = "virtual")]
        virtual_: usize,
    },
    /// `a†_a a†_b a_j a_i` with `i < j`, `a < b`.
    Double {
        occupied: [usize; 2],
        #[serde(rename = "virtual")]
        virtual_: [usize; 2],
    },
}

impl Excitation {
    pub fn is_double(&self) -> bool {
        matches!(self, Excitation::Double { .. })
    }

    fn ladder_product(&self) -> Vec<Ladder> {
        match *self {
            Excitation::Single { occupied, virtual_ } => {
                vec![Ladder::create(virtual_), Ladder::annihilate(occupied)]
            }
            Excitation::Double { occupied, virtual_ } => vec![
                Ladder::create(virtual_[0]),
                Ladder::create(virtual_[1]),
                Ladder::annihilate(occupied[1]),
                Ladder::annihilate(occupied[0]),
            ],
        }
    }
}

impl fmt::Display for Excitation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Excitation::Single { occupied, virtual_ } => write!(f, "s_{occupied}_{virtual_}"),
            Excitation::Double { occupied, virtual_ } => write!(
                f,
                "d_{}_{}_{}_{}",
                occupied[0], occupied[1], virtual_[0], virtual_[1]
            ),
        }
    }
}

/// One pool element: the excitation and its anti-Hermitian qubit generator
/// `T − T†`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcitationOp {
    pub excitation: Excitation,
    pub generator: PauliSum,
    pub name: String,
}

impl ExcitationOp {
    pub fn new(excitation: Excitation, mapping: &QubitMapping) -> Result<Self> {
        let t = FermionTerm::new(1.0, excitation.ladder_product());
        let mut dag = t.adjoint();
        dag.coefficient = -dag.coefficient;
        let generator = mapping.map_terms(&[t, dag])?;
        if generator.is_empty() {
            return Err(Error::invalid(format!(
                "excitation {excitation} maps to zero"
            )));
        }
        if !generator.all_commute() {
            return Err(Error::invalid(format!(
                "generator of {excitation} has non-commuting terms"
            )));
        }
        Ok(ExcitationOp {
            name: excitation.to_string(),
            excitation,
            generator,
        })
    }

    pub fn is_double(&self) -> bool {
        self.excitation.is_double()
    }

    /// Spin orbitals touched by the excitation, as a mode mask. This is the
    /// register the cost model places the excitation's CNOT block on.
    pub fn support(&self) -> u64 {
        match self.excitation {
            Excitation::Single { occupied, virtual_ } => 1 << occupied | 1 << virtual_,
            Excitation::Double { occupied, virtual_ } => {
                1 << occupied[0] | 1 << occupied[1] | 1 << virtual_[0] | 1 << virtual_[1]
            }
        }
    }

    /// Qubits acted on by the mapped generator.
    pub fn pauli_support(&self) -> u64 {
        self.generator.support()
    }

    pub fn cnot_cost(&self) -> usize {
        if self.is_double() {
            DOUBLE_CNOTS
        } else {
            SINGLE_CNOTS
        }
    }

    /// Appends `exp(θ·generator)` to `circuit` as Pauli rotations sharing a
    /// new parameter; returns the parameter id.
    pub fn append_to(&self, circuit: &mut ParamCircuit) -> Result<usize> {
        Error::check_dim(circuit.n_qubits(), self.generator.n_qubits())?;
        let id = circuit.add_parameter(self.name.clone());
        for (c, t) in self.generator.terms() {
            if t.is_identity() {
                continue;
            }
            // exp(θ·i·c·P) = exp(−i·(−2c)·θ/2·P)
            circuit.rotation(*t, id, -2.0 * c.im)?;
        }
        Ok(id)
    }
}

/// Fragment for a single excitation, one parameter.
pub fn compile_excitation(op: &ExcitationOp) -> Result<ParamCircuit> {
    if !op.generator.is_anti_hermitian(IMAG_TOLERANCE) {
        return Err(Error::invalid(
            "excitation generator must be anti-Hermitian",
        ));
    }
    if !op.generator.all_commute() {
        return Err(Error::invalid("excitation generator terms do not commute"));
    }
    let mut c = ParamCircuit::new(op.generator.n_qubits());
    op.append_to(&mut c)?;
    Ok(c)
}

/// Circuit `Π_k exp(θ_k A_k)`, first operator applied first.
pub fn build_ansatz(n_qubits: usize, ops: &[ExcitationOp]) -> Result<ParamCircuit> {
    let mut c = ParamCircuit::new(n_qubits);
    for op in ops {
        op.append_to(&mut c)?;
    }
    Ok(c)
}

/// Enumerates the excitations in canonical order: singles (up, then down),
/// same-spin doubles (up, then down), then opposite-spin doubles.
pub fn enumerate_excitations(
    n_spatial: usize,
    n_up: usize,
    n_down: usize,
) -> Result<Vec<Excitation>> {
    if n_up > n_spatial || n_down > n_spatial {
        return Err(Error::invalid(format!(
            "({n_up}, {n_down}) electrons do not fit in {n_spatial} spatial orbitals"
        )));
    }
    let spin = |s: Spin| match s {
        Spin::Up => (0, n_up),
        Spin::Down => (n_spatial, n_down),
    };
    let occ = |s: Spin| {
        let (off, n) = spin(s);
        (0..n).map(move |i| off + i)
    };
    let virt = |s: Spin| {
        let (off, n) = spin(s);
        (n..n_spatial).map(move |a| off + a)
    };
    let mut out = Vec::new();
    for s in [Spin::Up, Spin::Down] {
        for i in occ(s) {
            for a in virt(s) {
                out.push(Excitation::Single {
                    occupied: i,
                    virtual_: a,
                });
            }
        }
    }
    for s in [Spin::Up, Spin::Down] {
        let o: Vec<usize> = occ(s).collect();
        let v: Vec<usize> = virt(s).collect();
        for (x, &i) in o.iter().enumerate() {
            for &j in &o[x + 1..] {
                for (y, &a) in v.iter().enumerate() {
                    for &b in &v[y + 1..] {
                        out.push(Excitation::Double {
                            occupied: [i, j],
                            virtual_: [a, b],
                        });
                    }
                }
            }
        }
    }
    for i in occ(Spin::Up) {
        for j in occ(Spin::Down) {
            for a in virt(Spin::Up) {
                for b in virt(Spin::Down) {
                    out.push(Excitation::Double {
                        occupied: [i, j],
                        virtual_: [a, b],
                    });
                }
            }
        }
    }
    Ok(out)
}

/// The full UCCSD pool, generators mapped with `mapping`.
pub fn generate_pool(
    n_spatial: usize,
    n_up: usize,
    n_down: usize,
    mapping: &QubitMapping,
) -> Result<Vec<ExcitationOp>> {
    if mapping.n_modes() != 2 * n_spatial {
        return Err(Error::invalid(format!(
            "mapping has {} modes, active space has {} spin orbitals",
            mapping.n_modes(),
            2 * n_spatial
        )));
    }
    let excitations = enumerate_excitations(n_spatial, n_up, n_down)?;
    excitations
        .into_par_iter()
        .map(|e| ExcitationOp::new(e, mapping))
        .collect()
}

/// Ordered, duplicate-free choice of pool operators.
#[derive(Clone, Debug, PartialEq)]
pub struct PoolSelection {
    chosen: Vec<ExcitationOp>,
    n_singles: usize,
    n_doubles: usize,
}

impl PoolSelection {
    pub fn new(chosen: Vec<ExcitationOp>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for op in &chosen {
            if !seen.insert(op.excitation) {
                return Err(Error::invalid(format!("{} selected twice", op.name)));
            }
        }
        let n_doubles = chosen.iter().filter(|o| o.is_double()).count();
        Ok(PoolSelection {
            n_singles: chosen.len() - n_doubles,
            n_doubles,
            chosen,
        })
    }

    pub fn chosen(&self) -> &[ExcitationOp] {
        &self.chosen
    }

    /// `(singles, doubles)`.
    pub fn counts(&self) -> (usize, usize) {
        (self.n_singles, self.n_doubles)
    }

    pub fn cnot_cost(&self) -> usize {
        cnot_cost(self.n_singles, self.n_doubles)
    }

    pub fn cnot_depth(&self) -> usize {
        cnot_depth(self.chosen.iter().map(|o| (o.support(), o.cnot_cost())))
    }

    pub fn summary(&self) -> SelectionSummary {
        SelectionSummary {
            operators: self
                .chosen
                .iter()
                .map(|o| OperatorSummary {
                    name: o.name.clone(),
                    excitation: o.excitation,
                    support: support_qubits(o.support()),
                })
                .collect(),
            n_singles: self.n_singles,
            n_doubles: self.n_doubles,
            cnot_cost: self.cnot_cost(),
            cnot_depth: self.cnot_depth(),
        }
    }
}

/// `13·doubles + 2·singles`.
pub fn cnot_cost(n_singles: usize, n_doubles: usize) -> usize {
    DOUBLE_CNOTS * n_doubles + SINGLE_CNOTS * n_singles
}

/// Two-qubit depth of a sequence of blocks `(support mask, block depth)`.
/// Each block starts once every qubit it touches is free.
pub fn cnot_depth<I>(blocks: I) -> usize
where
    I: IntoIterator<Item = (u64, usize)>,
{
    let mut free_at = [0usize; 64];
    let mut depth = 0;
    for (support, d) in blocks {
        let qubits: Vec<usize> = (0..64).filter(|q| support >> q & 1 == 1).collect();
        let start = qubits.iter().map(|&q| free_at[q]).max().unwrap_or(0);
        let end = start + d;
        for q in qubits {
            free_at[q] = end;
        }
        depth = depth.max(end);
    }
    depth
}

fn support_qubits(mask: u64) -> Vec<usize> {
    (0..64).filter(|q| mask >> q & 1 == 1).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSummary {
    pub name: String,
    pub excitation: Excitation,
    pub support: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub operators: Vec<OperatorSummary>,
    pub n_singles: usize,
    pub n_doubles: usize,
    pub cnot_cost: usize,
    pub cnot_depth: usize,
}
