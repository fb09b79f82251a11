//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vqe_forge_core::circuit::{apply_circuit, ParamCircuit};
use vqe_forge_core::fermion::MolecularIntegrals;
use vqe_forge_core::forging::ForgedAnsatz;
use vqe_forge_core::pauli::{PauliSum, PauliTerm};
use vqe_forge_core::state::{prepare_basis, StateVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn single_qubit(letter: char) -> DMatrix<Complex64> {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match letter {
        'I' => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        'X' => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        'Y' => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        'Z' => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => panic!("bad letter {letter}"),
    }
}

/// Kronecker product with label character `q` acting on bit `q` of the
/// basis index.
pub fn label_matrix(label: &str) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for ch in label.chars() {
        m = single_qubit(ch).kronecker(&m);
    }
    m
}

pub fn dense(h: &PauliSum) -> DMatrix<Complex64> {
    let d = 1usize << h.n_qubits();
    let mut m = DMatrix::from_element(d, d, c(0.0, 0.0));
    for (coef, t) in h.terms() {
        m += label_matrix(&t.label()) * *coef;
    }
    m
}

pub fn to_vector(s: &StateVector) -> DVector<Complex64> {
    DVector::from_column_slice(s.amplitudes())
}

pub fn dense_expectation(h: &PauliSum, s: &StateVector) -> f64 {
    let v = to_vector(s);
    (v.adjoint() * dense(h) * &v)[(0, 0)].re
}

pub fn hermitian_spectrum(m: DMatrix<Complex64>) -> Vec<f64> {
    let mut e: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

pub fn real_spectrum(m: DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

pub fn random_label<R: Rng>(r: &mut R, n: usize) -> String {
    (0..n)
        .map(|_| ['I', 'X', 'Y', 'Z'][r.random_range(0..4)])
        .collect()
}

pub fn random_term<R: Rng>(r: &mut R, n: usize) -> PauliTerm {
    PauliTerm::from_label(&random_label(r, n)).unwrap()
}

/// Random sum with real coefficients (Hermitian).
pub fn random_hermitian<R: Rng>(r: &mut R, n: usize, terms: usize) -> PauliSum {
    let mut h = PauliSum::new(n);
    for _ in 0..terms {
        h.push(c(r.random_range(-1.0..1.0), 0.0), random_term(r, n))
            .unwrap();
    }
    h
}

/// Random circuit of Pauli rotations (some sharing parameters), CNOTs and X gates.
pub fn random_circuit<R: Rng>(r: &mut R, n: usize, gates: usize) -> (ParamCircuit, Vec<f64>) {
    let mut circ = ParamCircuit::new(n);
    let n_params = 1 + gates / 3;
    for k in 0..n_params {
        circ.add_parameter(format!("t{k}"));
    }
    for _ in 0..gates {
        match r.random_range(0..6) {
            0 if n > 1 => {
                let a = r.random_range(0..n);
                let b = (a + r.random_range(1..n)) % n;
                circ.cnot(a, b).unwrap();
            }
            1 => circ.x(r.random_range(0..n)).unwrap(),
            _ => {
                let mut t = random_term(r, n);
                while t.is_identity() {
                    t = random_term(r, n);
                }
                circ.rotation(t, r.random_range(0..n_params), r.random_range(-2.0..2.0))
                    .unwrap();
            }
        }
    }
    let params = (0..n_params).map(|_| r.random_range(-3.0..3.0)).collect();
    (circ, params)
}

pub fn random_state<R: Rng>(r: &mut R, n: usize) -> StateVector {
    let amps = (0..1usize << n)
        .map(|_| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
        .collect();
    StateVector::normalized_from(amps).unwrap()
}

/// Central differences of `f` at `x`.
pub fn finite_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut p = x.to_vec();
            p[i] += h;
            let plus = f(&p);
            p[i] -= 2.0 * h;
            let minus = f(&p);
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

/// Random real integrals with the 8-fold permutation symmetry.
pub fn random_integrals<R: Rng>(r: &mut R, n: usize, electrons: usize) -> MolecularIntegrals {
    let mut h1 = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = r.random_range(-1.0..1.0);
            h1[i * n + j] = v;
            h1[j * n + i] = v;
        }
    }
    let mut h2 = vec![0.0; n * n * n * n];
    let idx = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    if h2[idx(i, j, k, l)] != 0.0 {
                        continue;
                    }
                    let v = r.random_range(-0.5..0.5);
                    for (a, b, cc, d) in [
                        (i, j, k, l),
                        (j, i, k, l),
                        (i, j, l, k),
                        (j, i, l, k),
                        (k, l, i, j),
                        (l, k, i, j),
                        (k, l, j, i),
                        (l, k, j, i),
                    ] {
                        h2[idx(a, b, cc, d)] = v;
                    }
                }
            }
        }
    }
    MolecularIntegrals::new(n, electrons, r.random_range(-1.0..1.0), h1, h2)
        .and_then(|m| m.with_ms2((electrons % 2) as i64))
        .unwrap()
}

/// `a_q` / `a†_q` on an occupation bitmask, with the canonical sign
/// `(−1)^{#occupied modes below q}`.
fn ladder(det: u64, q: usize, dagger: bool) -> Option<(u64, f64)> {
    let occupied = det >> q & 1 == 1;
    if occupied == dagger {
        return None;
    }
    let sign = if (det & ((1u64 << q) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    Some((det ^ 1 << q, sign))
}

fn apply_string(det: u64, ops: &[(usize, bool)]) -> Option<(u64, f64)> {
    let mut d = det;
    let mut s = 1.0;
    for &(q, dag) in ops.iter().rev() {
        let (nd, sign) = ladder(d, q, dag)?;
        d = nd;
        s *= sign;
    }
    Some((d, s))
}

/// Full Fock-space matrix of
/// `E0 + Σ h_pq a†_pσ a_qσ + ½ Σ (pq|rs) a†_pσ a†_rτ a_sτ a_qσ`
/// with spin-up modes `0..n` and spin-down modes `n..2n`.
pub fn fock_matrix(ints: &MolecularIntegrals) -> DMatrix<f64> {
    let n = ints.n_spatial();
    let modes = 2 * n;
    let dim = 1usize << modes;
    let mut m = DMatrix::zeros(dim, dim);
    for det in 0..dim as u64 {
        m[(det as usize, det as usize)] += ints.core_energy();
        for s in 0..2 {
            for p in 0..n {
                for q in 0..n {
                    let ops = [(p + s * n, true), (q + s * n, false)];
                    if let Some((d, sign)) = apply_string(det, &ops) {
                        m[(d as usize, det as usize)] += sign * ints.h1(p, q);
                    }
                }
            }
        }
        for s in 0..2 {
            for t in 0..2 {
                for p in 0..n {
                    for q in 0..n {
                        for r in 0..n {
                            for u in 0..n {
                                let v = ints.h2(p, q, r, u);
                                if v == 0.0 {
                                    continue;
                                }
                                let ops = [
                                    (p + s * n, true),
                                    (r + t * n, true),
                                    (u + t * n, false),
                                    (q + s * n, false),
                                ];
                                if let Some((d, sign)) = apply_string(det, &ops) {
                                    m[(d as usize, det as usize)] += 0.5 * sign * v;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    m
}

/// Spectrum of the Fock matrix restricted to determinants accepted by `keep`
/// (called with the up and down occupation counts).
pub fn fock_sector_spectrum(
    ints: &MolecularIntegrals,
    keep: impl Fn(u32, u32) -> bool,
) -> Vec<f64> {
    let n = ints.n_spatial();
    let full = fock_matrix(ints);
    let low = (1u64 << n) - 1;
    let dets: Vec<usize> = (0..full.nrows())
        .filter(|&d| keep((d as u64 & low).count_ones(), (d as u64 >> n).count_ones()))
        .collect();
    let sub = DMatrix::from_fn(dets.len(), dets.len(), |i, j| full[(dets[i], dets[j])]);
    real_spectrum(sub)
}

pub fn assert_spectra_match(a: &[f64], b: &[f64], tol: f64, ctx: &str) {
    assert_eq!(a.len(), b.len(), "{ctx}: spectrum sizes differ");
    for (k, (x, y)) in a.iter().zip(b).enumerate() {
        assert!((x - y).abs() <= tol, "{ctx}: eigenvalue {k}: {x} vs {y}");
    }
}

pub fn bitstrings(n: usize, ones: usize) -> Vec<String> {
    (0..1usize << n)
        .filter(|b| b.count_ones() as usize == ones)
        .map(|b| {
            (0..n)
                .map(|q| if b >> q & 1 == 1 { '1' } else { '0' })
                .collect()
        })
        .collect()
}

/// `Σ_n λ_n U|b_n⟩ ⊗ V|b_n⟩` with the up half on the low qubits.
pub fn schmidt_state(a: &ForgedAnsatz) -> DVector<Complex64> {
    let norm: f64 = a.schmidt_coeffs.iter().map(|l| l * l).sum::<f64>().sqrt();
    let dim = 1usize << (2 * a.n_half);
    let mut psi = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    for (b, l) in a.bitstrings.iter().zip(&a.schmidt_coeffs) {
        let basis = prepare_basis(a.n_half, b).unwrap();
        let u = to_vector(&apply_circuit(&a.up, &a.theta_up, &basis).unwrap());
        let v = to_vector(&apply_circuit(&a.down, &a.theta_down, &basis).unwrap());
        psi += v.kronecker(&u) * Complex64::new(l / norm, 0.0);
    }
    psi
}

pub fn random_forged_instance(seed: u64) -> (ForgedAnsatz, PauliSum) {
    let mut r = rng(seed);
    let n = r.random_range(2..=4);
    let e = r.random_range(1..n);
    let mut pool = bitstrings(n, e);
    pool.shuffle(&mut r);
    let k = r.random_range(1..=pool.len().min(4));
    pool.truncate(k);
    let lambda = (0..k).map(|_| r.random_range(-1.0..1.0)).collect();
    let (up, tu) = random_circuit(&mut r, n, 8);
    let (down, td) = random_circuit(&mut r, n, 8);
    let a = ForgedAnsatz::new(n, e, pool, lambda, up, down, tu, td).unwrap();
    let terms = r.random_range(5..30);
    (a, random_hermitian(&mut r, 2 * n, terms))
}
