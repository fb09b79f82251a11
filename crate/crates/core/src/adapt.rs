//! Gradient-screened ansatz growth: one-operator ADAPT, the two-stage
//! double/single threshold variant and TETRIS layer packing.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_ansatz, cnot_depth, ExcitationOp};
use crate::circuit::{apply_circuit, energy_and_gradient};
use crate::error::{Error, Result};
use crate::optim::OptimizerConfig;
use crate::pauli::{commutator_expectation_with, PauliSum};
use crate::record::{RunRecord, SelectionRound};
use crate::state::StateVector;
use crate::vqe::{minimize, run_vqe};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptConfig {
    pub eps_double: f64,
    pub eps_single: f64,
    /// Stop once every pool gradient is below this.
    pub eps_adapt: f64,
    pub max_operators: usize,
    pub optimizer: OptimizerConfig,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            eps_double: 1e-3,
            eps_single: 1e-3,
            eps_adapt: 1e-3,
            max_operators: 200,
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps_double", self.eps_double),
            ("eps_single", self.eps_single),
            ("eps_adapt", self.eps_adapt),
        ] {
            if v.is_nan() || v < 0.0 {
                return Err(Error::invalid(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        if self.max_operators == 0 {
            return Err(Error::invalid("max_operators must be positive"));
        }
        self.optimizer.validate()
    }
}

/// `∂E/∂θ_k` at `θ_k = 0` for appending `exp(θ_k A_k)` to `state`.
pub fn pool_gradients(
    h: &PauliSum,
    state: &StateVector,
    pool: &[ExcitationOp],
) -> Result<Vec<f64>> {
    Error::check_dim(h.n_qubits(), state.n_qubits())?;
    for op in pool {
        Error::check_dim(h.n_qubits(), op.generator.n_qubits())?;
    }
    let h_psi = h.apply(state.amplitudes())?;
    pool.par_iter()
        .map(|op| commutator_expectation_with(&h_psi, &op.generator, state))
        .collect()
}

/// Indices sorted by descending `|g|`, ties to the lowest index.
fn ranked(grads: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..grads.len()).collect();
    idx.sort_by(|&a, &b| grads[b].abs().total_cmp(&grads[a].abs()).then(a.cmp(&b)));
    idx
}

fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, g| m.max(g.abs()))
}

/// Growing ansatz: pool indices in circuit order plus their parameters.
struct Growth<'a> {
    h: &'a PauliSum,
    pool: &'a [ExcitationOp],
    reference: &'a StateVector,
    chosen: Vec<usize>,
    params: Vec<f64>,
    energy: f64,
    steps: usize,
    converged: bool,
}

impl<'a> Growth<'a> {
    fn new(h: &'a PauliSum, pool: &'a [ExcitationOp], reference: &'a StateVector) -> Result<Self> {
        Error::check_dim(h.n_qubits(), reference.n_qubits())?;
        Ok(Growth {
            h,
            pool,
            reference,
            chosen: Vec::new(),
            params: Vec::new(),
            energy: h.expectation(reference)?,
            steps: 0,
            converged: true,
        })
    }

    fn ops(&self) -> Vec<ExcitationOp> {
        self.chosen.iter().map(|&k| self.pool[k].clone()).collect()
    }

    fn state(&self) -> Result<StateVector> {
        let c = build_ansatz(self.h.n_qubits(), &self.ops())?;
        apply_circuit(&c, &self.params, self.reference)
    }

    fn push(&mut self, k: usize) {
        self.chosen.push(k);
        self.params.push(0.0);
    }

    fn optimize(
        &mut self,
        opt: &OptimizerConfig,
        stage: usize,
        record: &mut RunRecord,
        clock: Instant,
    ) -> Result<()> {
        let c = build_ansatz(self.h.n_qubits(), &self.ops())?;
        let (h, reference) = (self.h, self.reference);
        let out = minimize(
            |p| energy_and_gradient(&c, p, h, reference),
            |_| {},
            std::mem::take(&mut self.params),
            opt,
            stage,
            record,
            clock,
        )?;
        self.params = out.params;
        self.energy = out.energy;
        self.steps += out.steps;
        self.converged = out.converged;
        Ok(())
    }

    fn finish(self, mut record: RunRecord, clock: Instant) -> RunRecord {
        let ops = self.ops();
        record.final_energy = self.energy;
        record.final_parameters = self.params;
        record.operators = ops.iter().map(|o| o.name.clone()).collect();
        record.cnot_cost = ops.iter().map(|o| o.cnot_cost()).sum();
        record.cnot_depth = cnot_depth(ops.iter().map(|o| (o.support(), o.cnot_cost())));
        record.iterations = self.steps;
        record.converged &= self.converged;
        record.wall_ms = clock.elapsed().as_secs_f64() * 1e3;
        record
    }
}

fn start_record(method: &str, seed: u64, cfg: &AdaptConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let mut r = RunRecord::new(method, seed);
    r.converged = true;
    Ok(r)
}

/// Canonical ADAPT: one operator (largest |gradient|) per round.
pub fn run_adapt(
    h: &PauliSum,
    pool: &[ExcitationOp],
    reference: &StateVector,
    cfg: &AdaptConfig,
    seed: u64,
) -> Result<RunRecord> {
    grow(h, pool, reference, cfg, seed, false)
}

/// TETRIS-ADAPT: each round appends every high-gradient operator whose
/// support is disjoint from those already accepted in the round.
pub fn run_tetris_adapt(
    h: &PauliSum,
    pool: &[ExcitationOp],
    reference: &StateVector,
    cfg: &AdaptConfig,
    seed: u64,
) -> Result<RunRecord> {
    grow(h, pool, reference, cfg, seed, true)
}

fn grow(
    h: &PauliSum,
    pool: &[ExcitationOp],
    reference: &StateVector,
    cfg: &AdaptConfig,
    seed: u64,
    tetris: bool,
) -> Result<RunRecord> {
    let clock = Instant::now();
    let mut record = start_record(if tetris { "tetris" } else { "adapt" }, seed, cfg)?;
    let mut g = Growth::new(h, pool, reference)?;
    let mut state = reference.clone();
    for round in 0.. {
        let grads = pool_gradients(h, &state, pool)?;
        if pool.is_empty() || max_abs(grads.iter().copied()) < cfg.eps_adapt {
            break;
        }
        if g.chosen.len() >= cfg.max_operators {
            record.converged = false;
            record.diagnostics.push(format!(
                "truncated: max_operators = {} reached",
                cfg.max_operators
            ));
            break;
        }
        let order = ranked(&grads);
        let mut layer: Vec<usize> = Vec::new();
        let mut used = 0u64;
        for &k in &order {
            if grads[k].abs() < cfg.eps_adapt || g.chosen.len() + layer.len() >= cfg.max_operators {
                break;
            }
            let s = pool[k].support();
            if layer.is_empty() || (tetris && used & s == 0) {
                layer.push(k);
                used |= s;
            }
            if !tetris {
                break;
            }
        }
        let excluded = max_abs(
            order
                .iter()
                .filter(|k| !layer.contains(k))
                .map(|&k| grads[k]),
        );
        record.selection.push(SelectionRound {
            round,
            operators: layer.clone(),
            gradients: layer.iter().map(|&k| grads[k]).collect(),
            max_excluded_gradient: excluded,
        });
        for &k in &layer {
            g.push(k);
        }
        g.optimize(&cfg.optimizer, round, &mut record, clock)?;
        state = g.state()?;
    }
    if record.rows.is_empty() {
        record
            .diagnostics
            .push("reference already stationary".into());
    }
    Ok(g.finish(record, clock))
}

/// Two-stage screening: doubles at the reference, then singles at the
/// optimized doubles state, then a final optimization over both.
pub fn run_double_threshold_adapt(
    h: &PauliSum,
    pool: &[ExcitationOp],
    reference: &StateVector,
    cfg: &AdaptConfig,
    seed: u64,
) -> Result<RunRecord> {
    let clock = Instant::now();
    let mut record = start_record("double-adapt", seed, cfg)?;
    let mut g = Growth::new(h, pool, reference)?;

    let grads = pool_gradients(h, reference, pool)?;
    let doubles: Vec<usize> = ranked(&grads)
        .into_iter()
        .filter(|&k| pool[k].is_double())
        .collect();
    let (keep, drop): (Vec<usize>, Vec<usize>) = doubles
        .iter()
        .partition(|&&k| grads[k].abs() >= cfg.eps_double);
    record.selection.push(SelectionRound {
        round: 0,
        operators: keep.clone(),
        gradients: keep.iter().map(|&k| grads[k]).collect(),
        max_excluded_gradient: max_abs(drop.iter().map(|&k| grads[k])),
    });
    if keep.is_empty() {
        record
            .diagnostics
            .push("reference already stationary".into());
        return Ok(g.finish(record, clock));
    }
    for &k in keep.iter().take(cfg.max_operators) {
        g.push(k);
    }
    g.optimize(&cfg.optimizer, 0, &mut record, clock)?;

    let state = g.state()?;
    let grads = pool_gradients(h, &state, pool)?;
    let singles: Vec<usize> = ranked(&grads)
        .into_iter()
        .filter(|&k| !pool[k].is_double())
        .collect();
    let (keep, drop): (Vec<usize>, Vec<usize>) = singles
        .iter()
        .partition(|&&k| grads[k].abs() >= cfg.eps_single);
    record.selection.push(SelectionRound {
        round: 1,
        operators: keep.clone(),
        gradients: keep.iter().map(|&k| grads[k]).collect(),
        max_excluded_gradient: max_abs(drop.iter().map(|&k| grads[k])),
    });
    let room = cfg.max_operators.saturating_sub(g.chosen.len());
    if keep.len() > room {
        record.converged = false;
        record.diagnostics.push(format!(
            "truncated: max_operators = {} reached",
            cfg.max_operators
        ));
    }
    if !keep.is_empty() && room > 0 {
        for &k in keep.iter().take(room) {
            g.push(k);
        }
        g.optimize(&cfg.optimizer, 1, &mut record, clock)?;
    }
    Ok(g.finish(record, clock))
}

/// Vanilla UCCSD: every pool operator, optimized once.
pub fn run_uccsd(
    h: &PauliSum,
    pool: &[ExcitationOp],
    reference: &StateVector,
    opt: &OptimizerConfig,
    seed: u64,
) -> Result<RunRecord> {
    let ansatz = build_ansatz(h.n_qubits(), pool)?;
    let mut record = run_vqe(h, &ansatz, reference, opt, seed)?;
    record.method = "vanilla".into();
    record.cnot_cost = pool.iter().map(|o| o.cnot_cost()).sum();
    record.cnot_depth = cnot_depth(pool.iter().map(|o| (o.support(), o.cnot_cost())));
    Ok(record)
}
