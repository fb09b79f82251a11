//! Exact ground states and the plain VQE loop.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::circuit::{energy_and_gradient, ParamCircuit};
use crate::error::{Error, Result};
use crate::optim::{Adam, OptimizerConfig, Plateau};
use crate::pauli::{PauliSum, IMAG_TOLERANCE};
use crate::record::{RunRecord, TraceRow};
use crate::state::StateVector;

/// Largest register handled by [`exact_ground`].
pub const MAX_EXACT_QUBITS: usize = 14;
/// Above this size the Lanczos path replaces full diagonalization.
const DENSE_QUBITS: usize = 10;
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

fn check_exact_input(h: &PauliSum, limit: usize) -> Result<()> {
    if h.n_qubits() > limit {
        return Err(Error::TooLarge(format!(
            "{} qubits exceeds the exact-diagonalization limit of {limit}",
            h.n_qubits()
        )));
    }
    if !h.is_hermitian(IMAG_TOLERANCE) {
        return Err(Error::NotHermitian(
            "exact diagonalization needs a Hermitian sum".into(),
        ));
    }
    Ok(())
}

/// True when every matrix element of `h` in the computational basis is real.
fn is_real_matrix(h: &PauliSum) -> bool {
    h.terms().iter().all(|(c, t)| {
        if t.y_count() % 2 == 0 {
            c.im == 0.0
        } else {
            c.re == 0.0
        }
    })
}

fn dense_complex(h: &PauliSum) -> DMatrix<Complex64> {
    let dim = 1usize << h.n_qubits();
    let mut m = DMatrix::zeros(dim, dim);
    for (c, t) in h.terms() {
        let x = t.x_mask() as usize;
        for k in 0..dim {
            m[(k ^ x, k)] += c * t.column_phase(k);
        }
    }
    m
}

fn dense_real(h: &PauliSum) -> DMatrix<f64> {
    let dim = 1usize << h.n_qubits();
    let mut m = DMatrix::zeros(dim, dim);
    for (c, t) in h.terms() {
        let x = t.x_mask() as usize;
        for k in 0..dim {
            m[(k ^ x, k)] += (c * t.column_phase(k)).re;
        }
    }
    m
}

/// All eigenvalues in ascending order (dense, up to 12 qubits).
pub fn spectrum(h: &PauliSum) -> Result<Vec<f64>> {
    check_exact_input(h, 12)?;
    let mut values: Vec<f64> = if is_real_matrix(h) {
        SymmetricEigen::new(dense_real(h))
            .eigenvalues
            .iter()
            .copied()
            .collect()
    } else {
        SymmetricEigen::new(dense_complex(h))
            .eigenvalues
            .iter()
            .copied()
            .collect()
    };
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn residual(h: &PauliSum, state: &StateVector, e: f64) -> Result<f64> {
    let hv = h.apply(state.amplitudes())?;
    Ok(hv
        .iter()
        .zip(state.amplitudes())
        .map(|(a, b)| (a - b * e).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

fn dense_ground(h: &PauliSum) -> Result<(f64, StateVector)> {
    let (e, amps) = if is_real_matrix(h) {
        let eig = SymmetricEigen::new(dense_real(h));
        let i = eig.eigenvalues.imin();
        let v = eig
            .eigenvectors
            .column(i)
            .iter()
            .map(|&r| Complex64::new(r, 0.0))
            .collect();
        (eig.eigenvalues[i], v)
    } else {
        let eig = SymmetricEigen::new(dense_complex(h));
        let i = eig.eigenvalues.imin();
        (
            eig.eigenvalues[i],
            eig.eigenvectors.column(i).iter().copied().collect(),
        )
    };
    Ok((e, StateVector::normalized_from(amps)?))
}

/// Restarted Lanczos with full reorthogonalization.
fn lanczos_ground(h: &PauliSum) -> Result<(f64, StateVector)> {
    let dim = 1usize << h.n_qubits();
    let krylov = 96.min(dim);
    // Deterministic start with weight on every basis state.
    let mut start: Vec<Complex64> = (0..dim)
        .map(|k| Complex64::new(1.0 + ((k * 7919) % 101) as f64 / 101.0, 0.0))
        .collect();
    let mut best = (f64::NAN, StateVector::zero(h.n_qubits()));
    for _ in 0..60 {
        let v0 = StateVector::normalized_from(start)?;
        let mut basis: Vec<Vec<Complex64>> = vec![v0.into_amplitudes()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..krylov {
            let mut w = h.apply(&basis[j])?;
            let a: Complex64 = basis[j].iter().zip(&w).map(|(b, x)| b.conj() * x).sum();
            alpha.push(a.re);
            for _ in 0..2 {
                for b in &basis {
                    let proj: Complex64 = b.iter().zip(&w).map(|(u, x)| u.conj() * x).sum();
                    for (x, u) in w.iter_mut().zip(b) {
                        *x -= proj * u;
                    }
                }
            }
            let norm = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if j + 1 == krylov || norm < 1e-12 {
                break;
            }
            beta.push(norm);
            basis.push(w.into_iter().map(|x| x / norm).collect());
        }
        let m = alpha.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let i = eig.eigenvalues.imin();
        let y: DVector<f64> = eig.eigenvectors.column(i).into_owned();
        let mut ritz = vec![Complex64::new(0.0, 0.0); dim];
        for (coef, b) in y.iter().zip(&basis) {
            for (r, u) in ritz.iter_mut().zip(b) {
                *r += u * *coef;
            }
        }
        let state = StateVector::normalized_from(ritz)?;
        let e = h.expectation(&state)?;
        let res = residual(h, &state, e)?;
        best = (e, state);
        if res <= RESIDUAL_TOLERANCE * 0.1 {
            return Ok(best);
        }
        start = best.1.amplitudes().to_vec();
    }
    Ok(best)
}

/// Lowest eigenvalue and a unit-norm eigenvector.
pub fn exact_ground(h: &PauliSum) -> Result<(f64, StateVector)> {
    check_exact_input(h, MAX_EXACT_QUBITS)?;
    let (e, state) = if h.n_qubits() <= DENSE_QUBITS {
        dense_ground(h)?
    } else {
        lanczos_ground(h)?
    };
    let res = residual(h, &state, e)?;
    if res > RESIDUAL_TOLERANCE {
        return Err(Error::Numerical(format!(
            "ground-state residual {res:e} exceeds {RESIDUAL_TOLERANCE:e}"
        )));
    }
    Ok((e, state))
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, g| m.max(g.abs()))
}

/// Outcome of one [`minimize`] call.
pub(crate) struct Minimized {
    pub params: Vec<f64>,
    pub energy: f64,
    pub steps: usize,
    pub converged: bool,
}

/// ADAM descent shared by every engine. Rows are appended to `record` with
/// globally increasing iteration numbers; `project` runs after each step.
pub(crate) fn minimize<F, P>(
    mut objective: F,
    mut project: P,
    start: Vec<f64>,
    opt: &OptimizerConfig,
    stage: usize,
    record: &mut RunRecord,
    clock: Instant,
) -> Result<Minimized>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    P: FnMut(&mut [f64]),
{
    let mut params = start;
    let mut adam = Adam::new(opt, params.len());
    let mut plateau = Plateau::new(opt);
    let mut steps = 0;
    let mut converged = false;
    let mut energy = f64::NAN;
    for it in 0..=opt.max_iterations {
        let (e, grad) = objective(&params)?;
        if !e.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            record.diagnostics.push(format!(
                "non-finite energy or gradient at iteration {it} of stage {stage}"
            ));
            return Err(Error::Numerical(format!(
                "non-finite objective at iteration {it} (stage {stage})"
            )));
        }
        energy = e;
        record.rows.push(TraceRow {
            iteration: record.rows.len(),
            energy: e,
            grad_norm: inf_norm(&grad),
            elapsed_ms: clock.elapsed().as_secs_f64() * 1e3,
            stage,
        });
        if plateau.observe(e) {
            converged = true;
            break;
        }
        if it == opt.max_iterations {
            break;
        }
        adam.step(&mut params, &grad);
        project(&mut params);
        steps += 1;
    }
    Ok(Minimized {
        params,
        energy,
        steps,
        converged,
    })
}

/// Minimizes `⟨ref|U(θ)† H U(θ)|ref⟩` with ADAM and exact gradients.
///
/// The loop is deterministic; `seed` is recorded for provenance only.
pub fn run_vqe(
    h: &PauliSum,
    ansatz: &ParamCircuit,
    reference: &StateVector,
    opt: &OptimizerConfig,
    seed: u64,
) -> Result<RunRecord> {
    opt.validate()?;
    Error::check_dim(h.n_qubits(), ansatz.n_qubits())?;
    Error::check_dim(h.n_qubits(), reference.n_qubits())?;
    let clock = Instant::now();
    let mut record = RunRecord::new("vqe", seed);
    let start = opt.starting_point(ansatz.n_params())?;
    let out = minimize(
        |p| energy_and_gradient(ansatz, p, h, reference),
        |_| {},
        start,
        opt,
        0,
        &mut record,
        clock,
    )?;
    record.final_energy = out.energy;
    record.final_parameters = out.params;
    record.operators = ansatz.parameter_names().to_vec();
    record.iterations = out.steps;
    record.converged = out.converged;
    record.wall_ms = clock.elapsed().as_secs_f64() * 1e3;
    Ok(record)
}
