//! Dense statevectors, basis-state preparation and shot sampling.
//!
//! Amplitude index bit `q` is qubit `q` (qubit 0 is the least significant
//! bit). Bitstrings are written with qubit 0 first, matching Pauli labels.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::PauliTerm;

pub const NORM_TOLERANCE: f64 = 1e-10;

/// Practical ceiling for the dense representation.
pub const MAX_DENSE_QUBITS: usize = 22;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Self {
        StateVector::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        assert!(
            n_qubits <= MAX_DENSE_QUBITS,
            "{n_qubits} qubits exceeds dense ceiling"
        );
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        StateVector { n_qubits, amps }
    }

    /// Wraps amplitudes whose length is a power of two and whose norm is 1.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::invalid(format!(
                "amplitude count {} is not a power of two",
                amps.len()
            )));
        }
        let n_qubits = amps.len().trailing_zeros() as usize;
        if n_qubits > MAX_DENSE_QUBITS {
            return Err(Error::TooLarge(format!("{n_qubits} qubits")));
        }
        let s = StateVector { n_qubits, amps };
        let norm = s.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::invalid(format!("state norm {norm} is not 1")));
        }
        Ok(s)
    }

    /// Normalizes arbitrary non-zero amplitudes.
    pub fn normalized_from(mut amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::invalid("cannot normalize a zero vector"));
        }
        for a in &mut amps {
            *a /= norm;
        }
        StateVector::from_amplitudes(amps)
    }

    /// Unchecked wrapper for intermediate vectors (e.g. `H|ψ⟩`) that share
    /// the gate kernels but are not normalized.
    pub(crate) fn from_raw(n_qubits: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n_qubits);
        StateVector { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            Err(Error::invalid(format!(
                "qubit {q} out of range for {} qubits",
                self.n_qubits
            )))
        } else {
            Ok(())
        }
    }

    pub fn apply_x(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        let bit = 1usize << q;
        for k in 0..self.amps.len() {
            if k & bit == 0 {
                self.amps.swap(k, k | bit);
            }
        }
        Ok(())
    }

    /// X on every qubit in `mask`.
    pub fn apply_x_mask(&mut self, mask: usize) {
        if mask == 0 {
            return;
        }
        for k in 0..self.amps.len() {
            let j = k ^ mask;
            if k < j {
                self.amps.swap(k, j);
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::invalid("CNOT control equals target"));
        }
        let (c, t) = (1usize << control, 1usize << target);
        for k in 0..self.amps.len() {
            if k & c != 0 && k & t == 0 {
                self.amps.swap(k, k | t);
            }
        }
        Ok(())
    }

    /// `P|ψ⟩` in place.
    pub fn apply_pauli(&mut self, p: &PauliTerm) -> Result<()> {
        Error::check_dim(self.n_qubits, p.n_qubits())?;
        let x = p.x_mask() as usize;
        if x == 0 {
            for (k, a) in self.amps.iter_mut().enumerate() {
                *a *= p.column_phase(k);
            }
            return Ok(());
        }
        let high = 1usize << (usize::BITS - 1 - x.leading_zeros());
        for k in 0..self.amps.len() {
            if k & high == 0 {
                let j = k ^ x;
                let a = self.amps[k];
                let b = self.amps[j];
                self.amps[j] = p.column_phase(k) * a;
                self.amps[k] = p.column_phase(j) * b;
            }
        }
        Ok(())
    }

    /// `exp(−i·(angle/2)·P)|ψ⟩` in place.
    pub fn apply_pauli_rotation(&mut self, p: &PauliTerm, angle: f64) -> Result<()> {
        Error::check_dim(self.n_qubits, p.n_qubits())?;
        let (sin, cos) = (angle / 2.0).sin_cos();
        let minus_i_sin = Complex64::new(0.0, -sin);
        let x = p.x_mask() as usize;
        if x == 0 {
            for (k, a) in self.amps.iter_mut().enumerate() {
                *a *= cos + minus_i_sin * p.column_phase(k);
            }
            return Ok(());
        }
        let high = 1usize << (usize::BITS - 1 - x.leading_zeros());
        for k in 0..self.amps.len() {
            if k & high == 0 {
                let j = k ^ x;
                let a = self.amps[k];
                let b = self.amps[j];
                // (P ψ)[j] = phase(k)·ψ[k], (P ψ)[k] = phase(j)·ψ[j]
                self.amps[k] = cos * a + minus_i_sin * p.column_phase(j) * b;
                self.amps[j] = cos * b + minus_i_sin * p.column_phase(k) * a;
            }
        }
        Ok(())
    }

    /// Bitstring of basis index `index`, qubit 0 first.
    pub fn index_to_bitstring(n_qubits: usize, index: usize) -> String {
        (0..n_qubits)
            .map(|q| if index >> q & 1 == 1 { '1' } else { '0' })
            .collect()
    }
}

/// Parses a bitstring (qubit 0 first) into a basis index.
pub fn bitstring_to_index(bits: &str) -> Result<usize> {
    let mut index = 0usize;
    for (q, c) in bits.chars().enumerate() {
        match c {
            '0' => {}
            '1' => index |= 1 << q,
            other => {
                return Err(Error::format(0, q, format!("invalid bit {other:?}")));
            }
        }
    }
    Ok(index)
}

/// Computational basis state for `bitstring` (qubit 0 first).
pub fn prepare_basis(n_qubits: usize, bitstring: &str) -> Result<StateVector> {
    Error::check_dim(n_qubits, bitstring.chars().count())?;
    if n_qubits > MAX_DENSE_QUBITS {
        return Err(Error::TooLarge(format!("{n_qubits} qubits")));
    }
    Ok(StateVector::basis(n_qubits, bitstring_to_index(bitstring)?))
}

/// Measurement histogram keyed by bitstring (qubit 0 first).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub counts: BTreeMap<String, u64>,
    pub shots: u64,
}

impl Counts {
    pub fn get(&self, bits: &str) -> u64 {
        self.counts.get(bits).copied().unwrap_or(0)
    }
}

/// Draws basis indices from `|amplitude|²` with the given generator.
pub(crate) fn sample_indices<R: rand::Rng>(
    state: &StateVector,
    shots: usize,
    rng: &mut R,
) -> Vec<usize> {
    let dist =
        WeightedIndex::new(state.probabilities()).expect("unit-norm state has positive weight");
    (0..shots).map(|_| dist.sample(rng)).collect()
}

/// Multinomial sampling of `shots` measurements in the computational basis.
pub fn sample(state: &StateVector, shots: u64, seed: u64) -> Result<Counts> {
    if shots == 0 {
        return Err(Error::invalid("shots must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_index: BTreeMap<usize, u64> = BTreeMap::new();
    for k in sample_indices(state, shots as usize, &mut rng) {
        *by_index.entry(k).or_default() += 1;
    }
    let counts = by_index
        .into_iter()
        .map(|(k, n)| (StateVector::index_to_bitstring(state.n_qubits(), k), n))
        .collect();
    Ok(Counts { counts, shots })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prepare_basis_places_qubit_zero_in_lsb() {
        let s = prepare_basis(2, "10").unwrap();
        assert_eq!(s.amplitudes()[1], Complex64::new(1.0, 0.0));
        let z = prepare_basis(1, "0").unwrap();
        assert_eq!(z, StateVector::zero(1));
        assert!(matches!(
            prepare_basis(2, "1"),
            Err(Error::Dimension { .. })
        ));
        assert!(prepare_basis(2, "12").is_err());
    }

    #[test]
    fn sample_deterministic_state() {
        let c = sample(&StateVector::zero(1), 100, 7).unwrap();
        assert_eq!(c.get("0"), 100);
        assert_eq!(c.counts.len(), 1);
        assert!(sample(&StateVector::zero(1), 0, 7).is_err());
    }

    #[test]
    fn sample_plus_state_within_five_sigma() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::from_amplitudes(vec![Complex64::new(r, 0.0); 2]).unwrap();
        let shots = 100_000u64;
        let c = sample(&plus, shots, 11).unwrap();
        let sigma = (shots as f64 * 0.25).sqrt();
        for b in ["0", "1"] {
            assert!((c.get(b) as f64 - shots as f64 / 2.0).abs() < 5.0 * sigma);
        }
        assert_eq!(c, sample(&plus, shots, 11).unwrap());
        assert_eq!(c.counts.values().sum::<u64>(), shots);
    }

    #[test]
    fn pauli_application_matches_letters() {
        // Y|0⟩ = i|1⟩
        let mut s = StateVector::zero(1);
        s.apply_pauli(&PauliTerm::from_label("Y").unwrap()).unwrap();
        assert_eq!(s.amplitudes()[1], Complex64::new(0.0, 1.0));
        // Z on qubit 1 of |01⟩ (qubit1 = 1) gives −|01⟩
        let mut s = prepare_basis(2, "01").unwrap();
        s.apply_pauli(&PauliTerm::from_label("IZ").unwrap())
            .unwrap();
        assert_eq!(s.amplitudes()[2], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn cnot_and_x() {
        let mut s = prepare_basis(2, "10").unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(s, prepare_basis(2, "11").unwrap());
        s.apply_x(0).unwrap();
        assert_eq!(s, prepare_basis(2, "01").unwrap());
        assert!(s.apply_cnot(0, 0).is_err());
        assert!(s.apply_x(2).is_err());
    }
}
