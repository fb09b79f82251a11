//! Fermion-to-qubit encodings.
//!
//! Jordan–Wigner: `a_j = Z_0 ⋯ Z_{j−1} (X_j + iY_j)/2`, occupied mode = `|1⟩`.
//!
//! Parity: qubit `j` holds the parity of modes `0..=j`. It is obtained from
//! the Jordan–Wigner form by the CNOT basis change `|f⟩ → |Af⟩` (A lower
//! triangular ones), under which `X^x → X^{Ax}` and `Z^z → Z^{A^{-T} z}`.
//! With blocked spin ordering the qubits `n/2 − 1` (spin-up parity) and
//! `n − 1` (total parity) are conserved and are replaced by their
//! eigenvalues and removed.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{PauliSum, PauliTerm, DROP_TOLERANCE};

use super::hamiltonian::FermionHamiltonian;

/// Hamiltonian coefficients with an imaginary part above this are rejected.
const HERMITIAN_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingKind {
    JordanWigner,
    /// Parity encoding with the two spin-parity qubits removed.
    ParityReduced,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ladder {
    pub mode: usize,
    pub dagger: bool,
}

impl Ladder {
    pub fn create(mode: usize) -> Self {
        Ladder { mode, dagger: true }
    }

    pub fn annihilate(mode: usize) -> Self {
        Ladder {
            mode,
            dagger: false,
        }
    }
}

/// `coefficient · op_0 op_1 ⋯` (leftmost operator acts last).
#[derive(Clone, Debug, PartialEq)]
pub struct FermionTerm {
    pub coefficient: Complex64,
    pub ops: Vec<Ladder>,
}

impl FermionTerm {
    pub fn new(coefficient: f64, ops: Vec<Ladder>) -> Self {
        FermionTerm {
            coefficient: Complex64::new(coefficient, 0.0),
            ops,
        }
    }

    /// Hermitian conjugate: reversed order, daggers toggled, coefficient conjugated.
    pub fn adjoint(&self) -> Self {
        FermionTerm {
            coefficient: self.coefficient.conj(),
            ops: self
                .ops
                .iter()
                .rev()
                .map(|l| Ladder {
                    mode: l.mode,
                    dagger: !l.dagger,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QubitMapping {
    kind: MappingKind,
    n_modes: usize,
    n_up: usize,
    n_down: usize,
}

#[inline]
fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// `x'_j = x_0 ⊕ ⋯ ⊕ x_j`.
fn prefix_xor(mut x: u64) -> u64 {
    let mut shift = 1;
    while shift < 64 {
        x ^= x << shift;
        shift <<= 1;
    }
    x
}

/// Drops bit `pos`, shifting higher bits down.
fn remove_bit(mask: u64, pos: usize) -> u64 {
    let low = mask & low_mask(pos);
    let high = if pos + 1 >= 64 {
        0
    } else {
        (mask >> (pos + 1)) << pos
    };
    low | high
}

fn jw_ladder(op: Ladder, n: usize) -> [(Complex64, PauliTerm); 2] {
    let bit = 1u64 << op.mode;
    let string = bit - 1;
    let x = PauliTerm::new(n, bit, string).expect("mode in range");
    let y = PauliTerm::new(n, bit, string | bit).expect("mode in range");
    let sign = if op.dagger { -0.5 } else { 0.5 };
    [
        (Complex64::new(0.5, 0.0), x),
        (Complex64::new(0.0, sign), y),
    ]
}

/// Jordan–Wigner image of a product of ladder operators, unnormalized.
fn jw_product(term: &FermionTerm, n: usize, out: &mut Vec<(Complex64, PauliTerm)>) {
    let mut acc: Vec<(Complex64, PauliTerm)> = vec![(term.coefficient, PauliTerm::identity(n))];
    for op in &term.ops {
        let factors = jw_ladder(*op, n);
        let mut next = Vec::with_capacity(acc.len() * 2);
        for (ca, a) in &acc {
            for (cb, b) in &factors {
                let (phase, t) = a.mul_unchecked(b);
                next.push((ca * cb * phase.to_complex(), t));
            }
        }
        acc = next;
    }
    out.extend(acc);
}

impl QubitMapping {
    pub fn jordan_wigner(n_modes: usize) -> Self {
        QubitMapping {
            kind: MappingKind::JordanWigner,
            n_modes,
            n_up: 0,
            n_down: 0,
        }
    }

    pub fn parity_reduced(n_modes: usize, n_up: usize, n_down: usize) -> Result<Self> {
        if !n_modes.is_multiple_of(2) || n_modes < 2 {
            return Err(Error::invalid(format!(
                "parity reduction needs an even, positive mode count (got {n_modes})"
            )));
        }
        if n_up > n_modes / 2 || n_down > n_modes / 2 {
            return Err(Error::invalid(format!(
                "({n_up}, {n_down}) electrons exceed {} modes per spin",
                n_modes / 2
            )));
        }
        Ok(QubitMapping {
            kind: MappingKind::ParityReduced,
            n_modes,
            n_up,
            n_down,
        })
    }

    /// Mapping for `kind`; the electron counts are used by the parity
    /// reduction and by the Hartree–Fock reference.
    pub fn new(kind: MappingKind, n_modes: usize, n_up: usize, n_down: usize) -> Result<Self> {
        if !n_modes.is_multiple_of(2) {
            return Err(Error::invalid("spin-blocked mode count must be even"));
        }
        if n_up > n_modes / 2 || n_down > n_modes / 2 {
            return Err(Error::invalid(format!(
                "({n_up}, {n_down}) electrons exceed {} modes per spin",
                n_modes / 2
            )));
        }
        match kind {
            MappingKind::JordanWigner => Ok(QubitMapping {
                kind,
                n_modes,
                n_up,
                n_down,
            }),
            MappingKind::ParityReduced => QubitMapping::parity_reduced(n_modes, n_up, n_down),
        }
    }

    pub fn kind(&self) -> MappingKind {
        self.kind
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn electrons(&self) -> (usize, usize) {
        (self.n_up, self.n_down)
    }

    pub fn n_qubits(&self) -> usize {
        match self.kind {
            MappingKind::JordanWigner => self.n_modes,
            MappingKind::ParityReduced => self.n_modes - 2,
        }
    }

    fn removed_qubits(&self) -> (usize, usize) {
        (self.n_modes / 2 - 1, self.n_modes - 1)
    }

    /// Maps a Jordan–Wigner term to this encoding. `None` means the term
    /// flips a conserved parity qubit.
    fn convert(
        &self,
        coefficient: Complex64,
        t: &PauliTerm,
    ) -> Result<Option<(Complex64, PauliTerm)>> {
        match self.kind {
            MappingKind::JordanWigner => Ok(Some((coefficient, *t))),
            MappingKind::ParityReduced => {
                let n = self.n_modes;
                let (x, z) = (t.x_mask(), t.z_mask());
                let xp = prefix_xor(x) & low_mask(n);
                let zp = z ^ (z >> 1);
                let before = (x & z).count_ones() as i64;
                let after = (xp & zp).count_ones() as i64;
                // i^{before − after}; the difference is even.
                let mut c = if (before - after).rem_euclid(4) == 2 {
                    -coefficient
                } else {
                    coefficient
                };
                let (r1, r2) = self.removed_qubits();
                if (xp >> r1) & 1 == 1 || (xp >> r2) & 1 == 1 {
                    return Ok(None);
                }
                if (zp >> r1) & 1 == 1 && self.n_up % 2 == 1 {
                    c = -c;
                }
                if (zp >> r2) & 1 == 1 && (self.n_up + self.n_down) % 2 == 1 {
                    c = -c;
                }
                let xr = remove_bit(remove_bit(xp, r2), r1);
                let zr = remove_bit(remove_bit(zp, r2), r1);
                Ok(Some((c, PauliTerm::new(n - 2, xr, zr)?)))
            }
        }
    }

    /// Maps a sum of ladder-operator products. Operators must conserve the
    /// per-spin particle parities when the parity reduction is active.
    pub fn map_terms(&self, terms: &[FermionTerm]) -> Result<PauliSum> {
        for t in terms {
            if let Some(op) = t.ops.iter().find(|op| op.mode >= self.n_modes) {
                return Err(Error::invalid(format!(
                    "mode {} out of range for {} modes",
                    op.mode, self.n_modes
                )));
            }
        }
        let mut raw = Vec::new();
        for t in terms {
            jw_product(t, self.n_modes, &mut raw);
        }
        let jw = PauliSum::from_terms(self.n_modes, raw)?.normalized();
        self.convert_sum(&jw)
    }

    fn convert_sum(&self, jw: &PauliSum) -> Result<PauliSum> {
        let mut out = PauliSum::new(self.n_qubits());
        for (c, t) in jw.terms() {
            match self.convert(*c, t)? {
                Some((c2, t2)) => out.push(c2, t2)?,
                None => {
                    if c.norm() >= DROP_TOLERANCE {
                        return Err(Error::invalid(format!(
                            "term {t} does not conserve spin parity; cannot taper"
                        )));
                    }
                }
            }
        }
        Ok(out.normalized())
    }

    /// Qubit Hamiltonian; coefficients are real.
    pub fn map_hamiltonian(&self, h: &FermionHamiltonian) -> Result<PauliSum> {
        Error::check_dim(self.n_modes, h.n_spin_orbitals())?;
        let n = self.n_modes;
        let mut raw = vec![(Complex64::new(h.constant(), 0.0), PauliTerm::identity(n))];
        for (p, q, v) in h.one_body_entries() {
            let t = FermionTerm::new(v, vec![Ladder::create(p), Ladder::annihilate(q)]);
            jw_product(&t, n, &mut raw);
        }
        for ([p, q, r, s], v) in h.two_body_entries() {
            let t = FermionTerm::new(
                0.5 * v,
                vec![
                    Ladder::create(p),
                    Ladder::create(q),
                    Ladder::annihilate(r),
                    Ladder::annihilate(s),
                ],
            );
            jw_product(&t, n, &mut raw);
        }
        let jw = PauliSum::from_terms(n, raw)?.normalized();
        let mapped = self.convert_sum(&jw)?;
        let mut real = PauliSum::new(mapped.n_qubits());
        for (c, t) in mapped.terms() {
            if c.im.abs() > HERMITIAN_TOLERANCE {
                return Err(Error::NotHermitian(format!("term {t} has coefficient {c}")));
            }
            real.push(Complex64::new(c.re, 0.0), *t)?;
        }
        Ok(real.normalized())
    }

    /// Hartree–Fock occupation (lowest orbitals per spin) in this encoding,
    /// qubit 0 first.
    pub fn hartree_fock_bitstring(&self) -> String {
        let half = self.n_modes / 2;
        let mut occ = 0u64;
        for i in 0..self.n_up {
            occ |= 1 << i;
        }
        for i in 0..self.n_down {
            occ |= 1 << (half + i);
        }
        let (bits, n) = match self.kind {
            MappingKind::JordanWigner => (occ, self.n_modes),
            MappingKind::ParityReduced => {
                let p = prefix_xor(occ) & low_mask(self.n_modes);
                let (r1, r2) = self.removed_qubits();
                (remove_bit(remove_bit(p, r2), r1), self.n_modes - 2)
            }
        };
        (0..n)
            .map(|q| if bits >> q & 1 == 1 { '1' } else { '0' })
            .collect()
    }
}

pub fn jordan_wigner(h: &FermionHamiltonian) -> Result<PauliSum> {
    QubitMapping::jordan_wigner(h.n_spin_orbitals()).map_hamiltonian(h)
}

pub fn parity_map_reduced(h: &FermionHamiltonian, n_up: usize, n_down: usize) -> Result<PauliSum> {
    QubitMapping::parity_reduced(h.n_spin_orbitals(), n_up, n_down)?.map_hamiltonian(h)
}

/// Occupation reference for `(n_up, n_down)` electrons over `n_spin_orbitals`
/// blocked modes, encoded for `kind`.
pub fn hartree_fock_bitstring(
    n_spin_orbitals: usize,
    n_up: usize,
    n_down: usize,
    kind: MappingKind,
) -> Result<String> {
    Ok(QubitMapping::new(kind, n_spin_orbitals, n_up, n_down)?.hartree_fock_bitstring())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum_of(labels: &[(&str, f64, f64)]) -> PauliSum {
        let n = labels[0].0.len();
        PauliSum::from_terms(
            n,
            labels
                .iter()
                .map(|(l, re, im)| (Complex64::new(*re, *im), PauliTerm::from_label(l).unwrap())),
        )
        .unwrap()
        .normalized()
    }

    #[test]
    fn number_operator() {
        let m = QubitMapping::jordan_wigner(2);
        let n1 = m
            .map_terms(&[FermionTerm::new(
                1.0,
                vec![Ladder::create(1), Ladder::annihilate(1)],
            )])
            .unwrap();
        assert_eq!(n1, sum_of(&[("II", 0.5, 0.0), ("IZ", -0.5, 0.0)]));
    }

    #[test]
    fn hopping_term() {
        let m = QubitMapping::jordan_wigner(2);
        let hop = m
            .map_terms(&[
                FermionTerm::new(1.0, vec![Ladder::create(0), Ladder::annihilate(1)]),
                FermionTerm::new(1.0, vec![Ladder::create(1), Ladder::annihilate(0)]),
            ])
            .unwrap();
        assert_eq!(hop, sum_of(&[("XX", 0.5, 0.0), ("YY", 0.5, 0.0)]));
    }

    #[test]
    fn hf_bitstrings() {
        assert_eq!(
            hartree_fock_bitstring(4, 1, 1, MappingKind::JordanWigner).unwrap(),
            "1010"
        );
        assert_eq!(
            hartree_fock_bitstring(6, 0, 0, MappingKind::JordanWigner).unwrap(),
            "000000"
        );
        // occupation 1010 → parities 1100 → drop qubits 1 and 3 → "10"
        assert_eq!(
            hartree_fock_bitstring(4, 1, 1, MappingKind::ParityReduced).unwrap(),
            "10"
        );
        assert!(hartree_fock_bitstring(4, 3, 0, MappingKind::JordanWigner).is_err());
        assert!(hartree_fock_bitstring(5, 1, 0, MappingKind::ParityReduced).is_err());
    }

    #[test]
    fn bit_helpers() {
        assert_eq!(prefix_xor(0b1010), 0b0110);
        assert_eq!(prefix_xor(0b0101) & 0b1111, 0b0011);
        assert_eq!(remove_bit(0b1011, 1), 0b101);
        assert_eq!(remove_bit(0b1000, 3), 0);
    }

    #[test]
    fn parity_rejects_parity_breaking_terms() {
        let m = QubitMapping::parity_reduced(4, 1, 1).unwrap();
        let bad = m.map_terms(&[FermionTerm::new(1.0, vec![Ladder::create(0)])]);
        assert!(bad.is_err());
    }
}
