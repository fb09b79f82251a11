//! Parameterized circuits over the gate set {X, CNOT, Pauli rotation},
//! exact energies and adjoint-mode gradients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{PauliSum, PauliTerm};
use crate::state::StateVector;

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    X(usize),
    Cnot {
        control: usize,
        target: usize,
    },
    /// `exp(−i·(coefficient·θ[param]/2)·term)`.
    Rotation {
        term: PauliTerm,
        param: usize,
        coefficient: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamCircuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    params: Vec<String>,
}

impl ParamCircuit {
    pub fn new(n_qubits: usize) -> Self {
        ParamCircuit {
            n_qubits,
            gates: Vec::new(),
            params: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn parameter_names(&self) -> &[String] {
        &self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// Registers a parameter and returns its id.
    pub fn add_parameter(&mut self, name: impl Into<String>) -> usize {
        self.params.push(name.into());
        self.params.len() - 1
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q < self.n_qubits {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "qubit {q} out of range for {}-qubit circuit",
                self.n_qubits
            )))
        }
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        match &gate {
            Gate::X(q) => self.check_qubit(*q)?,
            Gate::Cnot { control, target } => {
                self.check_qubit(*control)?;
                self.check_qubit(*target)?;
                if control == target {
                    return Err(Error::invalid("CNOT control equals target"));
                }
            }
            Gate::Rotation { term, param, .. } => {
                Error::check_dim(self.n_qubits, term.n_qubits())?;
                if *param >= self.params.len() {
                    return Err(Error::invalid(format!("unknown parameter id {param}")));
                }
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn x(&mut self, q: usize) -> Result<()> {
        self.push(Gate::X(q))
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.push(Gate::Cnot { control, target })
    }

    pub fn rotation(&mut self, term: PauliTerm, param: usize, coefficient: f64) -> Result<()> {
        self.push(Gate::Rotation {
            term,
            param,
            coefficient,
        })
    }

    /// Appends `other`, giving its parameters fresh ids after the existing
    /// ones. Returns the id offset.
    pub fn append(&mut self, other: &ParamCircuit) -> Result<usize> {
        Error::check_dim(self.n_qubits, other.n_qubits)?;
        let offset = self.params.len();
        self.params.extend(other.params.iter().cloned());
        for g in &other.gates {
            self.gates.push(match g {
                Gate::Rotation {
                    term,
                    param,
                    coefficient,
                } => Gate::Rotation {
                    term: *term,
                    param: param + offset,
                    coefficient: *coefficient,
                },
                other => other.clone(),
            });
        }
        Ok(offset)
    }

    /// Checks that every registered parameter drives at least one gate.
    pub fn validate(&self) -> Result<()> {
        let mut used = vec![false; self.params.len()];
        for g in &self.gates {
            if let Gate::Rotation { param, .. } = g {
                used[*param] = true;
            }
        }
        match used.iter().position(|u| !u) {
            Some(p) => Err(Error::invalid(format!(
                "parameter {p} ({}) is not referenced by any gate",
                self.params[p]
            ))),
            None => Ok(()),
        }
    }

    /// The adjoint circuit `U†` (same parameter table).
    pub fn inverse(&self) -> ParamCircuit {
        let gates = self
            .gates
            .iter()
            .rev()
            .map(|g| match g {
                Gate::Rotation {
                    term,
                    param,
                    coefficient,
                } => Gate::Rotation {
                    term: *term,
                    param: *param,
                    coefficient: -coefficient,
                },
                other => other.clone(),
            })
            .collect();
        ParamCircuit {
            n_qubits: self.n_qubits,
            gates,
            params: self.params.clone(),
        }
    }

    /// The same circuit preceded by X gates preparing `bitstring` from
    /// `|0…0⟩` (qubit 0 first).
    pub fn with_basis_prefix(&self, bitstring: &str) -> Result<ParamCircuit> {
        let index = crate::state::bitstring_to_index(bitstring)?;
        Error::check_dim(self.n_qubits, bitstring.chars().count())?;
        let mut gates: Vec<Gate> = (0..self.n_qubits)
            .filter(|q| index >> q & 1 == 1)
            .map(Gate::X)
            .collect();
        gates.extend(self.gates.iter().cloned());
        Ok(self.with_gates(gates))
    }

    pub(crate) fn with_gates(&self, gates: Vec<Gate>) -> ParamCircuit {
        ParamCircuit {
            n_qubits: self.n_qubits,
            gates,
            params: self.params.clone(),
        }
    }
}

pub(crate) fn apply_gate(state: &mut StateVector, gate: &Gate, params: &[f64]) -> Result<()> {
    match gate {
        Gate::X(q) => state.apply_x(*q),
        Gate::Cnot { control, target } => state.apply_cnot(*control, *target),
        Gate::Rotation {
            term,
            param,
            coefficient,
        } => state.apply_pauli_rotation(term, coefficient * params[*param]),
    }
}

fn apply_gate_inverse(state: &mut StateVector, gate: &Gate, params: &[f64]) -> Result<()> {
    match gate {
        Gate::Rotation {
            term,
            param,
            coefficient,
        } => state.apply_pauli_rotation(term, -coefficient * params[*param]),
        other => apply_gate(state, other, params),
    }
}

fn check_inputs(circuit: &ParamCircuit, params: &[f64], state: &StateVector) -> Result<()> {
    if params.len() != circuit.n_params() {
        return Err(Error::invalid(format!(
            "expected {} parameters, got {}",
            circuit.n_params(),
            params.len()
        )));
    }
    Error::check_dim(circuit.n_qubits(), state.n_qubits())
}

/// `U(θ)|reference⟩`.
pub fn apply_circuit(
    circuit: &ParamCircuit,
    params: &[f64],
    reference: &StateVector,
) -> Result<StateVector> {
    check_inputs(circuit, params, reference)?;
    let mut state = reference.clone();
    for g in circuit.gates() {
        apply_gate(&mut state, g, params)?;
    }
    Ok(state)
}

/// `⟨ψ(θ)|H|ψ(θ)⟩` with `|ψ(θ)⟩ = U(θ)|reference⟩`.
pub fn energy(
    circuit: &ParamCircuit,
    params: &[f64],
    observable: &PauliSum,
    reference: &StateVector,
) -> Result<f64> {
    observable.expectation(&apply_circuit(circuit, params, reference)?)
}

/// Energy and exact gradient `∂E/∂θ_k` by one forward and one reverse sweep.
pub fn energy_and_gradient(
    circuit: &ParamCircuit,
    params: &[f64],
    observable: &PauliSum,
    reference: &StateVector,
) -> Result<(f64, Vec<f64>)> {
    let mut psi = apply_circuit(circuit, params, reference)?;
    let e = observable.expectation(&psi)?;
    let mut lambda = StateVector::from_raw(psi.n_qubits(), observable.apply(psi.amplitudes())?);
    let mut grad = vec![0.0; params.len()];
    for g in circuit.gates().iter().rev() {
        if let Gate::Rotation {
            term,
            param,
            coefficient,
        } = g
        {
            // d/dθ exp(−i c θ P/2) = (−i c/2) P exp(−i c θ P/2)
            let mut mu = psi.clone();
            mu.apply_pauli(term)?;
            let overlap = lambda.inner(&mu);
            grad[*param] += 2.0 * (overlap * Complex64::new(0.0, -coefficient / 2.0)).re;
        }
        apply_gate_inverse(&mut psi, g, params)?;
        apply_gate_inverse(&mut lambda, g, params)?;
    }
    Ok((e, grad))
}

pub fn energy_gradient(
    circuit: &ParamCircuit,
    params: &[f64],
    observable: &PauliSum,
    reference: &StateVector,
) -> Result<Vec<f64>> {
    energy_and_gradient(circuit, params, observable, reference).map(|(_, g)| g)
}

/// Circuit description used in forging configs and run records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "lowercase")]
pub enum GateSpec {
    X {
        qubit: usize,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    Rotation {
        pauli: String,
        param: usize,
        coefficient: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub n_qubits: usize,
    pub parameters: Vec<String>,
    pub gates: Vec<GateSpec>,
}

impl CircuitSpec {
    pub fn build(&self) -> Result<ParamCircuit> {
        let mut c = ParamCircuit::new(self.n_qubits);
        for p in &self.parameters {
            c.add_parameter(p.clone());
        }
        for g in &self.gates {
            match g {
                GateSpec::X { qubit } => c.x(*qubit)?,
                GateSpec::Cnot { control, target } => c.cnot(*control, *target)?,
                GateSpec::Rotation {
                    pauli,
                    param,
                    coefficient,
                } => {
                    let term = PauliTerm::from_label(pauli)?;
                    c.rotation(term, *param, *coefficient)?
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn from_circuit(c: &ParamCircuit) -> CircuitSpec {
        CircuitSpec {
            n_qubits: c.n_qubits(),
            parameters: c.parameter_names().to_vec(),
            gates: c
                .gates()
                .iter()
                .map(|g| match g {
                    Gate::X(q) => GateSpec::X { qubit: *q },
                    Gate::Cnot { control, target } => GateSpec::Cnot {
                        control: *control,
                        target: *target,
                    },
                    Gate::Rotation {
                        term,
                        param,
                        coefficient,
                    } => GateSpec::Rotation {
                        pauli: term.label(),
                        param: *param,
                        coefficient: *coefficient,
                    },
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn plus() -> StateVector {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        StateVector::from_amplitudes(vec![Complex64::new(r, 0.0); 2]).unwrap()
    }

    fn rz_circuit() -> ParamCircuit {
        let mut c = ParamCircuit::new(1);
        let t = c.add_parameter("t");
        c.rotation(PauliTerm::from_label("Z").unwrap(), t, 1.0)
            .unwrap();
        c
    }

    #[test]
    fn empty_circuit_is_identity() {
        let s = plus();
        assert_eq!(apply_circuit(&ParamCircuit::new(1), &[], &s).unwrap(), s);
    }

    #[test]
    fn rz_pi_maps_plus_to_minus() {
        let out = apply_circuit(&rz_circuit(), &[PI], &plus()).unwrap();
        let minus = [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        let overlap: Complex64 = out
            .amplitudes()
            .iter()
            .zip(minus)
            .map(|(a, b)| b.conj() * a / 2f64.sqrt())
            .sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rz_gradient_on_plus() {
        let c = rz_circuit();
        let x = PauliSum::from_labels([("X", 1.0)]).unwrap();
        let y = PauliSum::from_labels([("Y", 1.0)]).unwrap();
        let gx = energy_gradient(&c, &[0.0], &x, &plus()).unwrap();
        let gy = energy_gradient(&c, &[0.0], &y, &plus()).unwrap();
        // ⟨X⟩ = cos θ, ⟨Y⟩ = sin θ
        assert!(gx[0].abs() < 1e-14);
        assert!((gy[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_observable_is_constant() {
        let c = rz_circuit();
        let h = PauliSum::identity(1, -2.5);
        for t in [0.0, 0.3, 2.0] {
            assert!((energy(&c, &[t], &h, &plus()).unwrap() + 2.5).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_coefficient_rotation_has_zero_gradient() {
        let mut c = ParamCircuit::new(2);
        let a = c.add_parameter("a");
        let b = c.add_parameter("b");
        c.rotation(PauliTerm::from_label("XY").unwrap(), a, 1.0)
            .unwrap();
        c.rotation(PauliTerm::from_label("ZX").unwrap(), b, 0.0)
            .unwrap();
        let h = PauliSum::from_labels([("ZZ", 0.7), ("XI", -0.2)]).unwrap();
        let g = energy_gradient(&c, &[0.4, 0.9], &h, &StateVector::zero(2)).unwrap();
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn input_errors() {
        let c = rz_circuit();
        assert!(apply_circuit(&c, &[], &plus()).is_err());
        assert!(apply_circuit(&c, &[0.0], &StateVector::zero(2)).is_err());
        let mut d = ParamCircuit::new(2);
        assert!(d.x(2).is_err());
        assert!(d
            .rotation(PauliTerm::from_label("XX").unwrap(), 0, 1.0)
            .is_err());
        d.add_parameter("unused");
        assert!(d.validate().is_err());
    }

    #[test]
    fn circuit_spec_round_trip() {
        let mut c = ParamCircuit::new(2);
        let p = c.add_parameter("p");
        c.x(0).unwrap();
        c.cnot(0, 1).unwrap();
        c.rotation(PauliTerm::from_label("YX").unwrap(), p, -0.5)
            .unwrap();
        let spec = CircuitSpec::from_circuit(&c);
        let json = serde_json::to_string(&spec).unwrap();
        let back: CircuitSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.build().unwrap(), c);
    }
}
