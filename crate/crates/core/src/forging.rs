//! Entanglement forging: a Schmidt-form state
//! `Σ_n λ_n (U|b_n⟩) ⊗ (V|b_n⟩)` on `2N` qubits evaluated with `N`-qubit
//! simulations only.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{Excitation, ExcitationOp};
use crate::circuit::{apply_circuit, CircuitSpec, ParamCircuit};
use crate::error::{BitstringRule, Error, Result};
use crate::fermion::QubitMapping;
use crate::optim::OptimizerConfig;
use crate::pauli::{PauliSum, PauliTerm, IMAG_TOLERANCE};
use crate::record::RunRecord;
use crate::state::{bitstring_to_index, StateVector};
use crate::vqe::minimize;

/// Central-difference step for the forged objective.
pub const FD_STEP: f64 = 1e-5;

/// `H = Σ c (P_up ⊗ P_down)` with the up factor on the low `n_half` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorSplitHamiltonian {
    pub n_half: usize,
    pub terms: Vec<(Complex64, PauliTerm, PauliTerm)>,
}

impl TensorSplitHamiltonian {
    /// The `2·n_half`-qubit sum the split came from.
    pub fn reassemble(&self) -> Result<PauliSum> {
        let n = self.n_half;
        let mut out = PauliSum::new(2 * n);
        for (c, up, down) in &self.terms {
            let t = PauliTerm::new(
                2 * n,
                up.x_mask() | down.x_mask() << n,
                up.z_mask() | down.z_mask() << n,
            )?;
            out.push(*c, t)?;
        }
        Ok(out)
    }
}

pub fn split_hamiltonian(h: &PauliSum) -> Result<TensorSplitHamiltonian> {
    let n = h.n_qubits();
    if !n.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "cannot split {n} qubits into equal halves"
        )));
    }
    let half = n / 2;
    Ok(TensorSplitHamiltonian {
        n_half: half,
        terms: h
            .terms()
            .iter()
            .map(|(c, t)| (*c, t.slice(0, half), t.slice(half, half)))
            .collect(),
    })
}

/// Schmidt-form ansatz sharing one bitstring list between both halves.
#[derive(Clone, Debug, PartialEq)]
pub struct ForgedAnsatz {
    pub n_half: usize,
    pub electrons_per_spin: usize,
    pub bitstrings: Vec<String>,
    pub schmidt_coeffs: Vec<f64>,
    pub up: ParamCircuit,
    pub down: ParamCircuit,
    pub theta_up: Vec<f64>,
    pub theta_down: Vec<f64>,
}

fn bitstring_error(b: &str, rule: BitstringRule, detail: String) -> Error {
    Error::Bitstring {
        bitstring: b.to_string(),
        rule,
        detail,
    }
}

/// Checks one bitstring against the length and popcount rules.
pub fn check_bitstring(b: &str, n_half: usize, electrons_per_spin: usize) -> Result<()> {
    if let Some(c) = b.chars().find(|c| *c != '0' && *c != '1') {
        return Err(bitstring_error(
            b,
            BitstringRule::Alphabet,
            format!("character {c:?} is not 0 or 1"),
        ));
    }
    let len = b.chars().count();
    if len != n_half {
        return Err(bitstring_error(
            b,
            BitstringRule::Length,
            format!("has {len} bits, one per spatial orbital ({n_half}) required"),
        ));
    }
    let ones = b.chars().filter(|c| *c == '1').count();
    if ones != electrons_per_spin {
        return Err(bitstring_error(
            b,
            BitstringRule::Popcount,
            format!("has {ones} ones, the per-spin electron count is {electrons_per_spin}"),
        ));
    }
    Ok(())
}

impl ForgedAnsatz {
    /// Validates and normalizes `schmidt_coeffs`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_half: usize,
        electrons_per_spin: usize,
        bitstrings: Vec<String>,
        schmidt_coeffs: Vec<f64>,
        up: ParamCircuit,
        down: ParamCircuit,
        theta_up: Vec<f64>,
        theta_down: Vec<f64>,
    ) -> Result<Self> {
        let mut a = ForgedAnsatz {
            n_half,
            electrons_per_spin,
            bitstrings,
            schmidt_coeffs,
            up,
            down,
            theta_up,
            theta_down,
        };
        a.validate()?;
        normalize(&mut a.schmidt_coeffs)?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bitstrings.is_empty() {
            return Err(Error::invalid("at least one bitstring is required"));
        }
        for (i, b) in self.bitstrings.iter().enumerate() {
            check_bitstring(b, self.n_half, self.electrons_per_spin)?;
            if self.bitstrings[..i].contains(b) {
                return Err(bitstring_error(
                    b,
                    BitstringRule::Distinct,
                    "listed twice".into(),
                ));
            }
        }
        if self.schmidt_coeffs.len() != self.bitstrings.len() {
            return Err(Error::invalid(format!(
                "{} Schmidt coefficients for {} bitstrings",
                self.schmidt_coeffs.len(),
                self.bitstrings.len()
            )));
        }
        for (name, c, theta) in [
            ("up", &self.up, &self.theta_up),
            ("down", &self.down, &self.theta_down),
        ] {
            Error::check_dim(self.n_half, c.n_qubits())?;
            if c.n_params() != theta.len() {
                return Err(Error::invalid(format!(
                    "{name} circuit has {} parameters, {} given",
                    c.n_params(),
                    theta.len()
                )));
            }
        }
        Ok(())
    }

    pub fn n_schmidt(&self) -> usize {
        self.bitstrings.len()
    }

    /// Flat parameter vector `[λ, θ_U, θ_V]`.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = self.schmidt_coeffs.clone();
        p.extend(&self.theta_up);
        p.extend(&self.theta_down);
        p
    }

    /// Copy with parameters taken from a flat `[λ, θ_U, θ_V]` vector.
    pub fn with_parameters(&self, p: &[f64]) -> Result<ForgedAnsatz> {
        let (k, nu) = (self.n_schmidt(), self.theta_up.len());
        Error::check_dim(k + nu + self.theta_down.len(), p.len())?;
        let mut a = self.clone();
        a.schmidt_coeffs = p[..k].to_vec();
        a.theta_up = p[k..k + nu].to_vec();
        a.theta_down = p[k + nu..].to_vec();
        Ok(a)
    }

    /// The explicit `2N`-qubit state.
    pub fn assemble(&self) -> Result<StateVector> {
        self.validate()?;
        let lambda = normalized(&self.schmidt_coeffs)?;
        let (ups, downs) = self.half_states()?;
        let dim = 1usize << self.n_half;
        let mut amps = vec![Complex64::new(0.0, 0.0); dim * dim];
        for n in 0..self.n_schmidt() {
            for (j, d) in downs[n].amplitudes().iter().enumerate() {
                for (i, u) in ups[n].amplitudes().iter().enumerate() {
                    amps[i | j << self.n_half] += lambda[n] * u * d;
                }
            }
        }
        StateVector::from_amplitudes(amps)
    }

    fn half_states(&self) -> Result<(Vec<StateVector>, Vec<StateVector>)> {
        let mut ups = Vec::new();
        let mut downs = Vec::new();
        for b in &self.bitstrings {
            let basis = StateVector::basis(self.n_half, bitstring_to_index(b)?);
            ups.push(apply_circuit(&self.up, &self.theta_up, &basis)?);
            downs.push(apply_circuit(&self.down, &self.theta_down, &basis)?);
        }
        Ok((ups, downs))
    }
}

fn normalized(lambda: &[f64]) -> Result<Vec<f64>> {
    let mut l = lambda.to_vec();
    normalize(&mut l)?;
    Ok(l)
}

fn normalize(lambda: &mut [f64]) -> Result<()> {
    let norm = lambda.iter().map(|l| l * l).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Numerical(format!(
            "Schmidt coefficients have norm {norm}"
        )));
    }
    lambda.iter_mut().for_each(|l| *l /= norm);
    Ok(())
}

fn pauli_expectation(p: &PauliTerm, state: &StateVector) -> Result<f64> {
    let mut s = state.clone();
    s.apply_pauli(p)?;
    Ok(state.inner(&s).re)
}

/// Distinct half operators and, per term, indices into them.
struct HalfTables {
    up: Vec<PauliTerm>,
    down: Vec<PauliTerm>,
    terms: Vec<(f64, usize, usize)>,
}

fn tables(h: &TensorSplitHamiltonian) -> Result<HalfTables> {
    let mut up_index = BTreeMap::new();
    let mut down_index = BTreeMap::new();
    let mut terms = Vec::with_capacity(h.terms.len());
    for (c, u, d) in &h.terms {
        if c.im.abs() > IMAG_TOLERANCE {
            return Err(Error::NotHermitian(format!(
                "term {u}⊗{d} has coefficient {c}"
            )));
        }
        let nu = up_index.len();
        let iu = *up_index.entry(*u).or_insert(nu);
        let nd = down_index.len();
        let id = *down_index.entry(*d).or_insert(nd);
        terms.push((c.re, iu, id));
    }
    let invert = |m: BTreeMap<PauliTerm, usize>| {
        let mut v: Vec<(usize, PauliTerm)> = m.into_iter().map(|(t, i)| (i, t)).collect();
        v.sort_by_key(|e| e.0);
        v.into_iter().map(|e| e.1).collect::<Vec<_>>()
    };
    Ok(HalfTables {
        up: invert(up_index),
        down: invert(down_index),
        terms,
    })
}

/// `(|a⟩ + i^p |b⟩)/√2`.
fn superpose(a: &StateVector, b: &StateVector, p: u32) -> Result<StateVector> {
    let phase = Complex64::new(0.0, 1.0).powu(p);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let amps = a
        .amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x + phase * y) * s)
        .collect();
    StateVector::from_amplitudes(amps)
}

/// `⟨ψ|H|ψ⟩` for the forged state with normalized Schmidt coefficients.
///
/// Diagonal pairs contribute `λ_n² ⟨P⟩⟨Q⟩`; each `n < m` contributes
/// `λ_n λ_m Σ_p (−1)^p ⟨φ^p|P|φ^p⟩⟨φ^p|Q|φ^p⟩` with
/// `|φ^p⟩ = (|b_n⟩ + i^p|b_m⟩)/√2` propagated through each half circuit.
pub fn forged_expectation(ansatz: &ForgedAnsatz, h: &TensorSplitHamiltonian) -> Result<f64> {
    ansatz.validate()?;
    Error::check_dim(ansatz.n_half, h.n_half)?;
    let tab = tables(h)?;
    forged_with_tables(ansatz, &tab)
}

fn forged_with_tables(ansatz: &ForgedAnsatz, tab: &HalfTables) -> Result<f64> {
    let lambda = normalized(&ansatz.schmidt_coeffs)?;
    let (ups, downs) = ansatz.half_states()?;
    let k = ansatz.n_schmidt();
    // (n, m, p, weight); p = 0 on the diagonal
    let mut tasks = Vec::new();
    for n in 0..k {
        tasks.push((n, n, 0u32, lambda[n] * lambda[n]));
        for m in n + 1..k {
            for p in 0..4u32 {
                let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                tasks.push((n, m, p, sign * lambda[n] * lambda[m]));
            }
        }
    }
    let parts: Vec<f64> = tasks
        .par_iter()
        .map(|&(n, m, p, w)| -> Result<f64> {
            if w == 0.0 {
                return Ok(0.0);
            }
            let (u, d) = if n == m {
                (ups[n].clone(), downs[n].clone())
            } else {
                (
                    superpose(&ups[n], &ups[m], p)?,
                    superpose(&downs[n], &downs[m], p)?,
                )
            };
            let a = tab
                .up
                .iter()
                .map(|t| pauli_expectation(t, &u))
                .collect::<Result<Vec<_>>>()?;
            let b = tab
                .down
                .iter()
                .map(|t| pauli_expectation(t, &d))
                .collect::<Result<Vec<_>>>()?;
            Ok(w * tab
                .terms
                .iter()
                .map(|&(c, i, j)| c * a[i] * b[j])
                .sum::<f64>())
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum())
}

/// JW single-excitation rotations on every orbital pair `i < j`, one
/// parameter each.
pub fn givens_half_circuit(n_half: usize) -> Result<ParamCircuit> {
    let mapping = QubitMapping::jordan_wigner(n_half);
    let mut c = ParamCircuit::new(n_half);
    for i in 0..n_half {
        for j in i + 1..n_half {
            ExcitationOp::new(
                Excitation::Single {
                    occupied: i,
                    virtual_: j,
                },
                &mapping,
            )?
            .append_to(&mut c)?;
        }
    }
    Ok(c)
}

/// ADAM over `(λ, θ_U, θ_V)` with central finite differences; λ is
/// renormalized after every step.
pub fn run_forged_vqe(
    h: &PauliSum,
    ansatz: &ForgedAnsatz,
    opt: &OptimizerConfig,
    seed: u64,
) -> Result<RunRecord> {
    opt.validate()?;
    ansatz.validate()?;
    let split = split_hamiltonian(h)?;
    Error::check_dim(2 * ansatz.n_half, h.n_qubits())?;
    let tab = tables(&split)?;
    let clock = Instant::now();
    let mut record = RunRecord::new("forge", seed);
    let k = ansatz.n_schmidt();
    let mut start = match &opt.initial_parameters {
        Some(p) => {
            Error::check_dim(ansatz.parameters().len(), p.len())?;
            p.clone()
        }
        None => ansatz.parameters(),
    };
    normalize(&mut start[..k])?;
    let eval = |p: &[f64]| -> Result<f64> { forged_with_tables(&ansatz.with_parameters(p)?, &tab) };
    let out = minimize(
        |p| {
            let e = eval(p)?;
            let grad = (0..p.len())
                .into_par_iter()
                .map(|i| {
                    let mut q = p.to_vec();
                    q[i] = p[i] + FD_STEP;
                    let plus = eval(&q)?;
                    q[i] = p[i] - FD_STEP;
                    let minus = eval(&q)?;
                    Ok((plus - minus) / (2.0 * FD_STEP))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((e, grad))
        },
        |p| {
            let _ = normalize(&mut p[..k]);
        },
        start,
        opt,
        0,
        &mut record,
        clock,
    )?;
    record.final_energy = out.energy;
    record.final_parameters = out.params;
    record.operators = (0..k)
        .map(|n| format!("lambda_{}", ansatz.bitstrings[n]))
        .chain(
            ansatz
                .up
                .parameter_names()
                .iter()
                .map(|s| format!("up_{s}")),
        )
        .chain(
            ansatz
                .down
                .parameter_names()
                .iter()
                .map(|s| format!("down_{s}")),
        )
        .collect();
    record.iterations = out.steps;
    record.converged = out.converged;
    record.wall_ms = clock.elapsed().as_secs_f64() * 1e3;
    Ok(record)
}

/// How the two half circuits are built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum HalfCircuitSpec {
    /// [`givens_half_circuit`] on both halves.
    Givens,
    Explicit {
        up: CircuitSpec,
        down: CircuitSpec,
    },
}

/// Forged-ansatz description as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForgedConfig {
    pub bitstrings: Vec<String>,
    /// Initial λ; the first bitstring dominates when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schmidt_coeffs: Option<Vec<f64>>,
    #[serde(default = "default_half")]
    pub half_circuit: HalfCircuitSpec,
}

fn default_half() -> HalfCircuitSpec {
    HalfCircuitSpec::Givens
}

impl ForgedConfig {
    pub fn parse(text: &str) -> Result<ForgedConfig> {
        Ok(serde_json::from_str(text)?)
    }

    /// Builds the ansatz at zero circuit parameters.
    pub fn build(&self, n_half: usize, electrons_per_spin: usize) -> Result<ForgedAnsatz> {
        let (up, down) = match &self.half_circuit {
            HalfCircuitSpec::Givens => {
                let c = givens_half_circuit(n_half)?;
                (c.clone(), c)
            }
            HalfCircuitSpec::Explicit { up, down } => (up.build()?, down.build()?),
        };
        let k = self.bitstrings.len();
        let lambda = match &self.schmidt_coeffs {
            Some(l) => l.clone(),
            None => (0..k).map(|n| if n == 0 { 1.0 } else { 0.1 }).collect(),
        };
        let (nu, nd) = (up.n_params(), down.n_params());
        ForgedAnsatz::new(
            n_half,
            electrons_per_spin,
            self.bitstrings.clone(),
            lambda,
            up,
            down,
            vec![0.0; nu],
            vec![0.0; nd],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_ansatz(bits: &[&str], lambda: Vec<f64>, ones: usize) -> ForgedAnsatz {
        let n = bits[0].len();
        ForgedAnsatz::new(
            n,
            ones,
            bits.iter().map(|s| s.to_string()).collect(),
            lambda,
            ParamCircuit::new(n),
            ParamCircuit::new(n),
            vec![],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn split_at_the_boundary() {
        let h = PauliSum::from_labels([("ZIZI", 1.0), ("IIII", -0.5)]).unwrap();
        let s = split_hamiltonian(&h).unwrap();
        assert_eq!(s.terms[0].1.label(), "ZI");
        assert_eq!(s.terms[0].2.label(), "ZI");
        assert!(s.terms[1].1.is_identity() && s.terms[1].2.is_identity());
        assert_eq!(s.reassemble().unwrap(), h);
        assert!(split_hamiltonian(&PauliSum::new(3)).is_err());
    }

    #[test]
    fn zz_on_two_bitstrings() {
        // (|10⟩|10⟩ + |01⟩|01⟩)/√2 and Z_0 ⊗ Z_0: both components give +1
        let a = identity_ansatz(&["10", "01"], vec![1.0, 1.0], 1);
        let h = split_hamiltonian(&PauliSum::from_labels([("ZIZI", 1.0)]).unwrap()).unwrap();
        assert!((forged_expectation(&a, &h).unwrap() - 1.0).abs() < 1e-12);
        // X_0 X_1 on each half swaps the components
        let h = split_hamiltonian(&PauliSum::from_labels([("XXXX", 1.0)]).unwrap()).unwrap();
        assert!((forged_expectation(&a, &h).unwrap() - 1.0).abs() < 1e-12);
        let b = identity_ansatz(&["10", "01"], vec![1.0, -1.0], 1);
        assert!((forged_expectation(&b, &h).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn bitstring_rules_are_named() {
        let err = |bits: &[&str]| {
            ForgedAnsatz::new(
                2,
                1,
                bits.iter().map(|s| s.to_string()).collect(),
                vec![1.0; bits.len()],
                ParamCircuit::new(2),
                ParamCircuit::new(2),
                vec![],
                vec![],
            )
            .unwrap_err()
        };
        assert!(matches!(
            err(&["100"]),
            Error::Bitstring {
                rule: BitstringRule::Length,
                ..
            }
        ));
        assert!(matches!(
            err(&["11"]),
            Error::Bitstring {
                rule: BitstringRule::Popcount,
                ..
            }
        ));
        assert!(matches!(
            err(&["10", "10"]),
            Error::Bitstring {
                rule: BitstringRule::Distinct,
                ..
            }
        ));
        assert!(err(&["11"]).to_string().contains("popcount"));
    }

    #[test]
    fn givens_circuit_shape() {
        let c = givens_half_circuit(4).unwrap();
        assert_eq!(c.n_params(), 6);
        assert_eq!(c.n_qubits(), 4);
    }

    #[test]
    fn config_defaults() {
        let cfg = ForgedConfig::parse(r#"{"bitstrings": ["10", "01"]}"#).unwrap();
        assert_eq!(cfg.half_circuit, HalfCircuitSpec::Givens);
        let a = cfg.build(2, 1).unwrap();
        let norm: f64 = a.schmidt_coeffs.iter().map(|l| l * l).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(ForgedConfig::parse(r#"{"bitstrings": [], "extra": 1}"#).is_err());
    }
}
