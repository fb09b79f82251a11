use crate::error::Result;

use super::integrals::MolecularIntegrals;

/// Spin-orbital Hamiltonian
/// `H = c + Σ h_pq a†_p a_q + ½ Σ g_pqrs a†_p a†_q a_r a_s`.
///
/// Modes are blocked by spin: spatial orbital `i` is mode `i` for spin up
/// and mode `n_spatial + i` for spin down. `g` is antisymmetric under
/// `p ↔ q` and under `r ↔ s`.
#[derive(Clone, Debug, PartialEq)]
pub struct FermionHamiltonian {
    n_spin_orbitals: usize,
    constant: f64,
    one_body: Vec<f64>,
    two_body: Vec<f64>,
}

impl FermionHamiltonian {
    pub fn n_spin_orbitals(&self) -> usize {
        self.n_spin_orbitals
    }

    pub fn n_spatial(&self) -> usize {
        self.n_spin_orbitals / 2
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    #[inline]
    pub fn one_body(&self, p: usize, q: usize) -> f64 {
        self.one_body[p * self.n_spin_orbitals + q]
    }

    #[inline]
    pub fn two_body(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_spin_orbitals;
        self.two_body[((p * n + q) * n + r) * n + s]
    }

    /// Raw tensors for callers that build their own Hamiltonians. The
    /// two-body tensor is antisymmetrized, which leaves the operator unchanged.
    pub fn from_tensors(
        n_spin_orbitals: usize,
        constant: f64,
        one_body: Vec<f64>,
        two_body: Vec<f64>,
    ) -> Result<Self> {
        let n = n_spin_orbitals;
        crate::error::Error::check_dim(n * n, one_body.len())?;
        crate::error::Error::check_dim(n * n * n * n, two_body.len())?;
        let mut g = vec![0.0; n * n * n * n];
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let idx =
                            |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
                        g[idx(p, q, r, s)] = 0.25
                            * (two_body[idx(p, q, r, s)]
                                - two_body[idx(q, p, r, s)]
                                - two_body[idx(p, q, s, r)]
                                + two_body[idx(q, p, s, r)]);
                    }
                }
            }
        }
        Ok(FermionHamiltonian {
            n_spin_orbitals,
            constant,
            one_body,
            two_body: g,
        })
    }

    /// Nonzero one-body entries `(p, q, h_pq)`.
    pub(crate) fn one_body_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n_spin_orbitals;
        self.one_body
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(move |(i, v)| (i / n, i % n, *v))
    }

    /// Nonzero two-body entries `(p, q, r, s, g_pqrs)`.
    pub(crate) fn two_body_entries(&self) -> impl Iterator<Item = ([usize; 4], f64)> + '_ {
        let n = self.n_spin_orbitals;
        self.two_body
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(move |(i, v)| ([i / (n * n * n), i / (n * n) % n, i / n % n, i % n], *v))
    }
}

/// Assembles the spin-orbital Hamiltonian from spatial integrals.
///
/// `½ Σ (pq|rs) a†_{pσ} a†_{rτ} a_{sτ} a_{qσ}` gives the physicists' tensor
/// `g[pσ, rτ, sτ, qσ] = (pq|rs)`, which is then antisymmetrized.
pub fn build_fermion_hamiltonian(ints: &MolecularIntegrals) -> FermionHamiltonian {
    let ns = ints.n_spatial();
    let n = 2 * ns;
    let mut one_body = vec![0.0; n * n];
    for sigma in 0..2 {
        for p in 0..ns {
            for q in 0..ns {
                one_body[(p + sigma * ns) * n + (q + sigma * ns)] = ints.h1(p, q);
            }
        }
    }
    let idx = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
    let mut raw = vec![0.0; n * n * n * n];
    for sigma in 0..2 {
        for tau in 0..2 {
            for p in 0..ns {
                for q in 0..ns {
                    for r in 0..ns {
                        for s in 0..ns {
                            let v = ints.h2(p, q, r, s);
                            if v == 0.0 {
                                continue;
                            }
                            let (ps, qs) = (p + sigma * ns, q + sigma * ns);
                            let (rt, st) = (r + tau * ns, s + tau * ns);
                            raw[idx(ps, rt, st, qs)] += v;
                        }
                    }
                }
            }
        }
    }
    let mut g = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    g[idx(a, b, c, d)] = 0.5 * (raw[idx(a, b, c, d)] - raw[idx(b, a, c, d)]);
                }
            }
        }
    }
    FermionHamiltonian {
        n_spin_orbitals: n,
        constant: ints.core_energy(),
        one_body,
        two_body: g,
    }
}
