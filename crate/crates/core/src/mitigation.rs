//! Shot-based energy estimation under a Pauli-jump gate noise model and
//! readout confusion, with zero-noise extrapolation and twirled readout
//! error extinction (TREX).
//!
//! Each shot is one trajectory: after every noise site a uniformly random
//! non-identity two-qubit Pauli is inserted with probability `p2`. Shots are
//! processed in fixed-size chunks, each with its own ChaCha stream, so the
//! estimates do not depend on the thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{apply_gate, Gate, ParamCircuit};
use crate::error::{Error, Result};
use crate::pauli::{PauliSum, PauliTerm, IMAG_TOLERANCE};
use crate::state::StateVector;

const CHUNK: usize = 512;
/// Prefix states are cached only below this many stored amplitudes.
const PREFIX_CACHE_AMPLITUDES: usize = 1 << 22;
pub const DEFAULT_F_MIN: f64 = 0.05;

/// `seed` mixed with `index` (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutError {
    /// P(read 1 | prepared 0).
    pub p01: f64,
    /// P(read 0 | prepared 1).
    pub p10: f64,
}

impl ReadoutError {
    pub const IDEAL: ReadoutError = ReadoutError { p01: 0.0, p10: 0.0 };
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Pauli-jump probability per two-qubit noise site.
    pub p2: f64,
    /// One entry per qubit.
    pub readout: Vec<ReadoutError>,
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {p} is not a probability")))
    }
}

impl NoiseModel {
    pub fn new(p2: f64, readout: Vec<ReadoutError>) -> Result<Self> {
        let m = NoiseModel { p2, readout };
        m.validate()?;
        Ok(m)
    }

    pub fn uniform(n_qubits: usize, p2: f64, p01: f64, p10: f64) -> Result<Self> {
        NoiseModel::new(p2, vec![ReadoutError { p01, p10 }; n_qubits])
    }

    pub fn ideal(n_qubits: usize) -> Self {
        NoiseModel {
            p2: 0.0,
            readout: vec![ReadoutError::IDEAL; n_qubits],
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("p2", self.p2)?;
        for (q, r) in self.readout.iter().enumerate() {
            check_probability(&format!("readout[{q}].p01"), r.p01)?;
            check_probability(&format!("readout[{q}].p10"), r.p10)?;
        }
        Ok(())
    }

    fn check_qubits(&self, n_qubits: usize) -> Result<()> {
        if self.readout.len() != n_qubits {
            return Err(Error::invalid(format!(
                "readout noise covers {} qubits, circuit has {n_qubits}",
                self.readout.len()
            )));
        }
        Ok(())
    }

    /// Applies the readout channel to the outcome bits `ideal`.
    fn corrupt<R: Rng>(&self, ideal: usize, rng: &mut R) -> usize {
        let mut out = ideal;
        for (q, r) in self.readout.iter().enumerate() {
            let p = if ideal >> q & 1 == 0 { r.p01 } else { r.p10 };
            if p > 0.0 && rng.random::<f64>() < p {
                out ^= 1 << q;
            }
        }
        out
    }
}

/// A qubit pair that may receive a Pauli jump after gate `after_gate`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseSite {
    pub after_gate: usize,
    pub qubits: (usize, usize),
}

/// Noise sites in gate order. A weight-`w` rotation is a CNOT ladder over
/// its sorted support and contributes `2(w − 1)` sites on neighbouring
/// pairs; a CNOT contributes one; X gates none.
pub fn noise_sites(circuit: &ParamCircuit) -> Vec<NoiseSite> {
    let mut sites = Vec::new();
    for (g, gate) in circuit.gates().iter().enumerate() {
        match gate {
            Gate::X(_) => {}
            Gate::Cnot { control, target } => sites.push(NoiseSite {
                after_gate: g,
                qubits: (*control, *target),
            }),
            Gate::Rotation { term, .. } => {
                let qs: Vec<usize> = (0..circuit.n_qubits())
                    .filter(|q| term.support() >> q & 1 == 1)
                    .collect();
                for _ in 0..2 {
                    for w in qs.windows(2) {
                        sites.push(NoiseSite {
                            after_gate: g,
                            qubits: (w[0], w[1]),
                        });
                    }
                }
            }
        }
    }
    sites
}

/// Global folding `G (G† G)^k` with `scale = 2k + 1`.
pub fn fold_circuit(circuit: &ParamCircuit, scale: usize) -> Result<ParamCircuit> {
    if scale == 0 || scale.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "fold scale must be odd and >= 1, got {scale}"
        )));
    }
    let inverse = circuit.inverse();
    let mut gates = circuit.gates().to_vec();
    for _ in 0..scale / 2 {
        gates.extend(inverse.gates().iter().cloned());
        gates.extend(circuit.gates().iter().cloned());
    }
    Ok(circuit.with_gates(gates))
}

/// Qubit-wise commuting measurement setting and the terms it estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementGroup {
    /// Per-qubit basis letter; `I` where no term acts.
    pub basis: Vec<char>,
    /// `(coefficient, Z-support after rotation)`.
    pub terms: Vec<(f64, u64)>,
}

/// Greedy qubit-wise commuting grouping in term order. Returns the identity
/// coefficient and the groups.
pub fn measurement_groups(h: &PauliSum) -> Result<(f64, Vec<MeasurementGroup>)> {
    let n = h.n_qubits();
    let mut constant = 0.0;
    let mut groups: Vec<MeasurementGroup> = Vec::new();
    for (c, t) in h.terms() {
        if c.im.abs() > IMAG_TOLERANCE {
            return Err(Error::NotHermitian(format!("term {t} has coefficient {c}")));
        }
        if t.is_identity() {
            constant += c.re;
            continue;
        }
        let fits = |g: &MeasurementGroup| {
            (0..n).all(|q| {
                let l = t.letter(q);
                l == 'I' || g.basis[q] == 'I' || g.basis[q] == l
            })
        };
        let idx = match groups.iter().position(fits) {
            Some(i) => i,
            None => {
                groups.push(MeasurementGroup {
                    basis: vec!['I'; n],
                    terms: Vec::new(),
                });
                groups.len() - 1
            }
        };
        let g = &mut groups[idx];
        for q in 0..n {
            if t.letter(q) != 'I' {
                g.basis[q] = t.letter(q);
            }
        }
        g.terms.push((c.re, t.support()));
    }
    Ok((constant, groups))
}

/// Rotates `state` so that measuring Z on each qubit measures `basis`.
fn rotate_to_basis(state: &mut StateVector, basis: &[char]) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for (q, &b) in basis.iter().enumerate() {
        // H for X, H·S† for Y
        let m = match b {
            'X' => [
                [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
                [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
            ],
            'Y' => [
                [Complex64::new(h, 0.0), Complex64::new(0.0, -h)],
                [Complex64::new(h, 0.0), Complex64::new(0.0, h)],
            ],
            _ => continue,
        };
        let bit = 1usize << q;
        let amps = state.amplitudes_mut();
        for k in 0..amps.len() {
            if k & bit == 0 {
                let (a0, a1) = (amps[k], amps[k | bit]);
                amps[k] = m[0][0] * a0 + m[0][1] * a1;
                amps[k | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }
}

fn parity_sign(mask: u64) -> f64 {
    if mask.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn draw_index<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// An estimate with its shot-noise standard error (measurement groups
/// treated as independent).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Clone, Copy, Default)]
struct Moments {
    sum: f64,
    sum_sq: f64,
}

/// Trajectory sampler for one bound circuit.
struct Sampler<'a> {
    circuit: &'a ParamCircuit,
    params: &'a [f64],
    noise: &'a NoiseModel,
    sites: Vec<NoiseSite>,
    prefix: Option<Vec<StateVector>>,
    ideal_probs: Vec<Vec<f64>>,
    ideal_dists: Vec<Option<WeightedIndex<f64>>>,
}

impl<'a> Sampler<'a> {
    fn new(
        circuit: &'a ParamCircuit,
        params: &'a [f64],
        noise: &'a NoiseModel,
        groups: &[MeasurementGroup],
    ) -> Result<Self> {
        noise.validate()?;
        noise.check_qubits(circuit.n_qubits())?;
        if params.len() != circuit.n_params() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                circuit.n_params(),
                params.len()
            )));
        }
        let n = circuit.n_qubits();
        let cache = (circuit.gates().len() + 1) << n <= PREFIX_CACHE_AMPLITUDES;
        let mut state = StateVector::zero(n);
        let mut prefix = cache.then(|| vec![state.clone()]);
        for g in circuit.gates() {
            apply_gate(&mut state, g, params)?;
            if let Some(p) = prefix.as_mut() {
                p.push(state.clone());
            }
        }
        let ideal_probs: Vec<Vec<f64>> = groups
            .iter()
            .map(|g| {
                let mut s = state.clone();
                rotate_to_basis(&mut s, &g.basis);
                s.probabilities()
            })
            .collect();
        let ideal_dists = ideal_probs
            .iter()
            .map(|p| WeightedIndex::new(p).ok())
            .collect();
        Ok(Sampler {
            circuit,
            params,
            noise,
            sites: noise_sites(circuit),
            prefix,
            ideal_probs,
            ideal_dists,
        })
    }

    /// Site indices that fire in one trajectory, with their Pauli codes.
    fn draw_jumps<R: Rng>(&self, rng: &mut R) -> Vec<(usize, u8)> {
        let p = self.noise.p2;
        let n_sites = self.sites.len();
        let mut jumps = Vec::new();
        if p <= 0.0 || n_sites == 0 {
            return jumps;
        }
        if p >= 1.0 {
            for s in 0..n_sites {
                jumps.push((s, rng.random_range(1..16u8)));
            }
            return jumps;
        }
        let log_q = (1.0 - p).ln();
        let mut pos = 0usize;
        loop {
            let u: f64 = rng.random();
            let skip = ((1.0 - u).ln() / log_q).floor();
            if !(skip < (n_sites - pos) as f64) {
                break;
            }
            pos += skip as usize;
            jumps.push((pos, rng.random_range(1..16u8)));
            pos += 1;
            if pos >= n_sites {
                break;
            }
        }
        jumps
    }

    fn jump_term(&self, site: usize, code: u8) -> PauliTerm {
        let (a, b) = self.sites[site].qubits;
        let mut x = 0u64;
        let mut z = 0u64;
        for (q, letter) in [(a, code & 3), (b, code >> 2)] {
            // 1 = X, 2 = Y, 3 = Z
            if letter == 1 || letter == 2 {
                x |= 1 << q;
            }
            if letter == 2 || letter == 3 {
                z |= 1 << q;
            }
        }
        PauliTerm::new(self.circuit.n_qubits(), x, z).expect("site qubits in range")
    }

    fn run_trajectory(&self, jumps: &[(usize, u8)]) -> Result<StateVector> {
        let first_gate = self.sites[jumps[0].0].after_gate;
        let (mut state, resume) = match &self.prefix {
            Some(p) => (p[first_gate + 1].clone(), first_gate),
            None => {
                let mut s = StateVector::zero(self.circuit.n_qubits());
                for g in &self.circuit.gates()[..=first_gate] {
                    apply_gate(&mut s, g, self.params)?;
                }
                (s, first_gate)
            }
        };
        let mut j = 0;
        let gates = self.circuit.gates();
        for g in resume..gates.len() {
            if g > resume {
                apply_gate(&mut state, &gates[g], self.params)?;
            }
            while j < jumps.len() && self.sites[jumps[j].0].after_gate == g {
                state.apply_pauli(&self.jump_term(jumps[j].0, jumps[j].1))?;
                j += 1;
            }
        }
        Ok(state)
    }
}

/// How outcomes are turned into term values.
#[derive(Clone, Copy)]
enum Readout<'a> {
    Plain,
    Twirled(&'a TrexCalibration),
}

fn estimate(
    circuit: &ParamCircuit,
    params: &[f64],
    h: &PauliSum,
    noise: &NoiseModel,
    shots: usize,
    seed: u64,
    readout: Readout<'_>,
) -> Result<Estimate> {
    if shots == 0 {
        return Err(Error::invalid("shots must be positive"));
    }
    Error::check_dim(h.n_qubits(), circuit.n_qubits())?;
    let (constant, groups) = measurement_groups(h)?;
    // Per-term divisors: 1, or the calibrated attenuation.
    let divisors: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            g.terms
                .iter()
                .map(|&(_, b)| match readout {
                    Readout::Plain => Ok(1.0),
                    Readout::Twirled(cal) => cal.attenuation_of(b, h.n_qubits()),
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let sampler = Sampler::new(circuit, params, noise, &groups)?;
    let full = (1usize << circuit.n_qubits()) - 1;

    let value_of = |gi: usize, outcome: usize| -> f64 {
        groups[gi]
            .terms
            .iter()
            .zip(&divisors[gi])
            .map(|(&(c, b), d)| c * parity_sign(b & outcome as u64) / d)
            .sum()
    };
    let measure = |gi: usize, ideal: usize, rng: &mut ChaCha8Rng| -> f64 {
        let outcome = match readout {
            Readout::Plain => noise.corrupt(ideal, rng),
            Readout::Twirled(_) => {
                let mask = rng.random::<u64>() as usize & full;
                noise.corrupt(ideal ^ mask, rng) ^ mask
            }
        };
        value_of(gi, outcome)
    };

    let n_chunks = shots.div_ceil(CHUNK);
    let chunks: Vec<Vec<Moments>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| -> Result<Vec<Moments>> {
            let mut rng = stream_rng(seed, c as u64);
            let count = CHUNK.min(shots - c * CHUNK);
            let mut acc = vec![Moments::default(); groups.len()];
            let mut clean = 0usize;
            for _ in 0..count {
                let jumps = sampler.draw_jumps(&mut rng);
                if jumps.is_empty() {
                    clean += 1;
                    continue;
                }
                let state = sampler.run_trajectory(&jumps)?;
                for (gi, g) in groups.iter().enumerate() {
                    let mut s = state.clone();
                    rotate_to_basis(&mut s, &g.basis);
                    let ideal = draw_index(&s.probabilities(), &mut rng);
                    let v = measure(gi, ideal, &mut rng);
                    acc[gi].sum += v;
                    acc[gi].sum_sq += v * v;
                }
            }
            for gi in 0..groups.len() {
                for _ in 0..clean {
                    let ideal = match &sampler.ideal_dists[gi] {
                        Some(d) => d.sample(&mut rng),
                        None => draw_index(&sampler.ideal_probs[gi], &mut rng),
                    };
                    let v = measure(gi, ideal, &mut rng);
                    acc[gi].sum += v;
                    acc[gi].sum_sq += v * v;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let n = shots as f64;
    let mut value = constant;
    let mut var = 0.0;
    for gi in 0..groups.len() {
        let (s, sq) = chunks
            .iter()
            .fold((0.0, 0.0), |(s, sq), c| (s + c[gi].sum, sq + c[gi].sum_sq));
        let mean = s / n;
        value += mean;
        var += (sq / n - mean * mean).max(0.0) / n;
    }
    Ok(Estimate {
        value,
        std_error: var.sqrt(),
    })
}

/// Monte-Carlo energy with gate and readout noise, `shots` per measurement
/// group.
pub fn noisy_energy(
    circuit: &ParamCircuit,
    params: &[f64],
    h: &PauliSum,
    noise: &NoiseModel,
    shots: usize,
    seed: u64,
) -> Result<f64> {
    noisy_estimate(circuit, params, h, noise, shots, seed).map(|e| e.value)
}

/// [`noisy_energy`] with its standard error.
pub fn noisy_estimate(
    circuit: &ParamCircuit,
    params: &[f64],
    h: &PauliSum,
    noise: &NoiseModel,
    shots: usize,
    seed: u64,
) -> Result<Estimate> {
    estimate(circuit, params, h, noise, shots, seed, Readout::Plain)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extrapolator {
    Linear,
    Richardson,
    Exponential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZneConfig {
    pub scale_factors: Vec<usize>,
    pub extrapolator: Extrapolator,
    pub shots: usize,
    pub seed: u64,
}

impl Default for ZneConfig {
    fn default() -> Self {
        ZneConfig {
            scale_factors: vec![1, 3, 5],
            extrapolator: Extrapolator::Richardson,
            shots: 10_000,
            seed: 0,
        }
    }
}

impl ZneConfig {
    pub fn validate(&self) -> Result<()> {
        let f = &self.scale_factors;
        if f.first() != Some(&1) {
            return Err(Error::invalid("scale_factors must start at 1"));
        }
        if f.len() < 2 {
            return Err(Error::invalid("at least two scale factors are required"));
        }
        if f.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("scale_factors must be strictly increasing"));
        }
        if let Some(s) = f.iter().find(|s| *s % 2 == 0) {
            return Err(Error::invalid(format!("scale factor {s} is even")));
        }
        if self.shots == 0 {
            return Err(Error::invalid("shots must be positive"));
        }
        Ok(())
    }
}

/// Zero-noise value and, when the requested fit was replaced, the reason.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolated {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

fn linear_intercept(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    my - sxy / sxx * mx
}

/// Value at 0 of the interpolating polynomial through all points.
fn richardson(points: &[(f64, f64)]) -> f64 {
    points
        .iter()
        .enumerate()
        .map(|(i, &(xi, yi))| {
            let w: f64 = points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, &(xj, _))| xj / (xj - xi))
                .product();
            yi * w
        })
        .sum()
}

/// Least-squares `a, b` for fixed `c` in `a + b·e^{−cx}`, with the residual.
fn exp_linear_part(points: &[(f64, f64)], c: f64) -> (f64, f64, f64) {
    let t: Vec<(f64, f64)> = points.iter().map(|&(x, y)| ((-c * x).exp(), y)).collect();
    let n = t.len() as f64;
    let mt = t.iter().map(|p| p.0).sum::<f64>() / n;
    let my = t.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = t.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sty: f64 = t.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let b = if stt > 0.0 { sty / stt } else { 0.0 };
    let a = my - b * mt;
    let r = t.iter().map(|&(e, y)| (a + b * e - y).powi(2)).sum();
    (a, b, r)
}

const LM_ITERATIONS: usize = 200;

/// Levenberg–Marquardt fit of `a + b·e^{−cx}`, returning the value `a + b`
/// at `x = 0`; `None` if it does not settle on a decaying solution.
fn exponential_fit(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 {
        return None;
    }
    let span = points.iter().map(|p| p.0).fold(f64::MIN, f64::max);
    // coarse start from a log grid over the decay rate
    let (mut c, mut best) = (f64::NAN, f64::INFINITY);
    for k in 0..=60 {
        let trial = 1e-3 * 10f64.powf(k as f64 / 15.0) / span.max(1e-12);
        let (_, _, r) = exp_linear_part(points, trial);
        if r < best {
            best = r;
            c = trial;
        }
    }
    let (mut a, mut b, _) = exp_linear_part(points, c);
    let resid = |a: f64, b: f64, c: f64| -> f64 {
        points
            .iter()
            .map(|&(x, y)| (a + b * (-c * x).exp() - y).powi(2))
            .sum()
    };
    let mut cost = resid(a, b, c);
    let mut mu = 1e-3;
    let scale = points.iter().map(|p| p.1 * p.1).sum::<f64>().max(1e-300);
    for _ in 0..LM_ITERATIONS {
        if cost <= 1e-28 * scale {
            break;
        }
        // normal equations J^T J δ = −J^T r
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for &(x, y) in points {
            let e = (-c * x).exp();
            let r = a + b * e - y;
            let j = [1.0, e, -b * x * e];
            for u in 0..3 {
                jtr[u] += j[u] * r;
                for v in 0..3 {
                    jtj[u][v] += j[u] * j[v];
                }
            }
        }
        let mut m = nalgebra::Matrix3::from_fn(|u, v| jtj[u][v]);
        for u in 0..3 {
            m[(u, u)] += mu * jtj[u][u].max(1e-12);
        }
        let delta = m
            .lu()
            .solve(&nalgebra::Vector3::new(-jtr[0], -jtr[1], -jtr[2]))?;
        let (na, nb, nc) = (a + delta[0], b + delta[1], c + delta[2]);
        let new_cost = resid(na, nb, nc);
        if new_cost.is_finite() && new_cost < cost {
            let small = delta.norm() <= 1e-12 * (1.0 + a.abs() + b.abs() + c.abs());
            a = na;
            b = nb;
            c = nc;
            cost = new_cost;
            mu = (mu * 0.3).max(1e-12);
            if small {
                break;
            }
        } else {
            mu *= 10.0;
            if mu > 1e12 {
                break;
            }
        }
    }
    let exact_enough = cost <= 1e-16 * scale.max(1.0) || points.len() > 3;
    (c > 0.0 && (a + b).is_finite() && exact_enough).then_some(a + b)
}

/// Zero-noise limit from `(scale, value)` points.
pub fn zne_extrapolate(points: &[(f64, f64)], cfg: &ZneConfig) -> Result<Extrapolated> {
    if points.len() < 2 {
        return Err(Error::invalid("extrapolation needs at least two points"));
    }
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::invalid("extrapolation points must be finite"));
    }
    for (i, p) in points.iter().enumerate() {
        if points[..i].iter().any(|q| q.0 == p.0) {
            return Err(Error::invalid(format!("duplicate scale {}", p.0)));
        }
    }
    Ok(match cfg.extrapolator {
        Extrapolator::Linear => Extrapolated {
            value: linear_intercept(points),
            diagnostic: None,
        },
        Extrapolator::Richardson => Extrapolated {
            value: richardson(points),
            diagnostic: None,
        },
        Extrapolator::Exponential => match exponential_fit(points) {
            Some(value) => Extrapolated {
                value,
                diagnostic: None,
            },
            None => Extrapolated {
                value: linear_intercept(points),
                diagnostic: Some("exponential fit did not converge; linear fallback".into()),
            },
        },
    })
}

/// Twirled readout attenuations `f_b`, keyed by Z-support bitstring
/// (qubit 0 first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrexCalibration {
    pub attenuation: BTreeMap<String, f64>,
    pub shots: usize,
    pub seed: u64,
    pub f_min: f64,
}

fn support_label(mask: u64, n: usize) -> String {
    (0..n)
        .map(|q| if mask >> q & 1 == 1 { '1' } else { '0' })
        .collect()
}

impl TrexCalibration {
    pub fn attenuation_of(&self, support: u64, n_qubits: usize) -> Result<f64> {
        let key = support_label(support, n_qubits);
        self.attenuation
            .get(&key)
            .copied()
            .ok_or(Error::MissingCalibration(key))
    }
}

/// Estimates `f_b` for every Z-support measured for `h`, from `|0…0⟩`
/// under random X-mask twirls.
pub fn trex_calibrate(
    h: &PauliSum,
    noise: &NoiseModel,
    shots: usize,
    seed: u64,
) -> Result<TrexCalibration> {
    trex_calibrate_with(h, noise, shots, seed, DEFAULT_F_MIN)
}

pub fn trex_calibrate_with(
    h: &PauliSum,
    noise: &NoiseModel,
    shots: usize,
    seed: u64,
    f_min: f64,
) -> Result<TrexCalibration> {
    if shots == 0 {
        return Err(Error::invalid("shots must be positive"));
    }
    let n = h.n_qubits();
    noise.validate()?;
    noise.check_qubits(n)?;
    let (_, groups) = measurement_groups(h)?;
    let supports: Vec<u64> = {
        let mut s: Vec<u64> = groups
            .iter()
            .flat_map(|g| g.terms.iter().map(|t| t.1))
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    };
    let full = (1usize << n) - 1;
    let mut rng = stream_rng(seed, u64::MAX);
    let mut sums = vec![0i64; supports.len()];
    for _ in 0..shots {
        let mask = rng.random::<u64>() as usize & full;
        let flips = (noise.corrupt(mask, &mut rng) ^ mask) as u64;
        for (s, &b) in sums.iter_mut().zip(&supports) {
            *s += if (b & flips).count_ones().is_multiple_of(2) {
                1
            } else {
                -1
            };
        }
    }
    let mut attenuation = BTreeMap::new();
    for (&b, &s) in supports.iter().zip(&sums) {
        let f = s as f64 / shots as f64;
        if f <= f_min {
            return Err(Error::Unrecoverable {
                support: support_label(b, n),
                attenuation: f,
                cutoff: f_min,
            });
        }
        attenuation.insert(support_label(b, n), f);
    }
    Ok(TrexCalibration {
        attenuation,
        shots,
        seed,
        f_min,
    })
}

/// Twirled-readout energy with each Z-support divided by its attenuation.
pub fn trex_energy(
    circuit: &ParamCircuit,
    params: &[f64],
    h: &PauliSum,
    noise: &NoiseModel,
    calib: &TrexCalibration,
    shots: usize,
    seed: u64,
) -> Result<f64> {
    trex_estimate(circuit, params, h, noise, calib, shots, seed).map(|e| e.value)
}

pub fn trex_estimate(
    circuit: &ParamCircuit,
    params: &[f64],
    h: &PauliSum,
    noise: &NoiseModel,
    calib: &TrexCalibration,
    shots: usize,
    seed: u64,
) -> Result<Estimate> {
    estimate(
        circuit,
        params,
        h,
        noise,
        shots,
        seed,
        Readout::Twirled(calib),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrexConfig {
    pub calibration_shots: usize,
    pub f_min: f64,
}

impl Default for TrexConfig {
    fn default() -> Self {
        TrexConfig {
            calibration_shots: 10_000,
            f_min: DEFAULT_F_MIN,
        }
    }
}

impl TrexConfig {
    pub fn validate(&self) -> Result<()> {
        if self.calibration_shots == 0 {
            return Err(Error::invalid("calibration_shots must be positive"));
        }
        if !(self.f_min >= 0.0 && self.f_min < 1.0) {
            return Err(Error::invalid(format!(
                "f_min = {} must lie in [0, 1)",
                self.f_min
            )));
        }
        Ok(())
    }
}

/// Uniform noise description as written in run configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub p2: f64,
    pub p01: f64,
    pub p10: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            p2: 0.004,
            p01: 0.0,
            p10: 0.0,
        }
    }
}

impl NoiseConfig {
    pub fn model(&self, n_qubits: usize) -> Result<NoiseModel> {
        NoiseModel::uniform(n_qubits, self.p2, self.p01, self.p10)
    }
}

/// One line of the mitigation experiment table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MitigationRow {
    pub method: String,
    pub scale_or_mask: String,
    pub seed: u64,
    pub estimate: f64,
    pub exact: f64,
    pub abs_error: f64,
}

pub fn mitigation_csv(rows: &[MitigationRow]) -> String {
    let mut out = String::from("method,scale_or_mask,seed,estimate,exact,abs_error\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:?},{:?},{:?}",
            r.method, r.scale_or_mask, r.seed, r.estimate, r.exact, r.abs_error
        );
    }
    out
}

/// Estimates for one seed: unmitigated, ZNE, TREX and ZNE+TREX.
///
/// The scale-1 point doubles as the unmitigated estimate, so the methods
/// share shot noise. Seeds for each scale and for calibration are derived
/// from `seed`.
#[allow(clippy::too_many_arguments)]
pub fn mitigation_trial(
    circuit: &ParamCircuit,
    params: &[f64],
    h: &PauliSum,
    noise: &NoiseModel,
    zne: &ZneConfig,
    trex: &TrexConfig,
    seed: u64,
    exact: f64,
) -> Result<Vec<MitigationRow>> {
    zne.validate()?;
    trex.validate()?;
    let calib = trex_calibrate_with(
        h,
        noise,
        trex.calibration_shots,
        derive_seed(seed, 1000),
        trex.f_min,
    )?;
    let mut raw = Vec::new();
    let mut twirled = Vec::new();
    for (i, &s) in zne.scale_factors.iter().enumerate() {
        let folded = fold_circuit(circuit, s)?;
        let e = noisy_energy(
            &folded,
            params,
            h,
            noise,
            zne.shots,
            derive_seed(seed, i as u64),
        )?;
        let t = trex_energy(
            &folded,
            params,
            h,
            noise,
            &calib,
            zne.shots,
            derive_seed(seed, 100 + i as u64),
        )?;
        raw.push((s as f64, e));
        twirled.push((s as f64, t));
    }
    let scales = zne
        .scale_factors
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(";");
    let row = |method: &str, label: &str, estimate: f64| MitigationRow {
        method: method.into(),
        scale_or_mask: label.into(),
        seed,
        estimate,
        exact,
        abs_error: (estimate - exact).abs(),
    };
    let mut rows = Vec::new();
    for (&(s, e), &(_, t)) in raw.iter().zip(&twirled) {
        rows.push(row("raw", &format!("{s}"), e));
        rows.push(row("raw_trex", &format!("{s}"), t));
    }
    rows.push(row("none", "1", raw[0].1));
    rows.push(row("zne", &scales, zne_extrapolate(&raw, zne)?.value));
    rows.push(row("trex", "twirl", twirled[0].1));
    rows.push(row(
        "zne+trex",
        &scales,
        zne_extrapolate(&twirled, zne)?.value,
    ));
    Ok(rows)
}

/// [`mitigation_trial`] for every seed, rows in seed order.
#[allow(clippy::too_many_arguments)]
pub fn mitigation_experiment(
    circuit: &ParamCircuit,
    params: &[f64],
    h: &PauliSum,
    noise: &NoiseModel,
    zne: &ZneConfig,
    trex: &TrexConfig,
    seeds: &[u64],
    exact: f64,
) -> Result<Vec<MitigationRow>> {
    let per_seed: Vec<Vec<MitigationRow>> = seeds
        .par_iter()
        .map(|&s| mitigation_trial(circuit, params, h, noise, zne, trex, s, exact))
        .collect::<Result<_>>()?;
    Ok(per_seed.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn site_counts_follow_cnot_cost() {
        let mut c = ParamCircuit::new(4);
        let t = c.add_parameter("t");
        c.rotation(PauliTerm::from_label("XZIY").unwrap(), t, 1.0)
            .unwrap();
        c.rotation(PauliTerm::from_label("IZII").unwrap(), t, 1.0)
            .unwrap();
        c.cnot(0, 3).unwrap();
        c.x(2).unwrap();
        let sites = noise_sites(&c);
        assert_eq!(sites.len(), 4 + 1);
        assert_eq!(sites[0].qubits, (0, 1));
        assert_eq!(sites[1].qubits, (1, 3));
        assert_eq!(noise_sites(&fold_circuit(&c, 5).unwrap()).len(), 25);
    }

    #[test]
    fn fold_rejects_even() {
        let c = ParamCircuit::new(1);
        assert!(fold_circuit(&c, 2).is_err());
        assert!(fold_circuit(&c, 0).is_err());
        assert_eq!(fold_circuit(&c, 1).unwrap(), c);
    }

    #[test]
    fn extrapolators_on_exact_data() {
        let cfg = |e| ZneConfig {
            extrapolator: e,
            ..Default::default()
        };
        let lin = zne_extrapolate(&[(1.0, 2.0), (3.0, 4.0)], &cfg(Extrapolator::Linear)).unwrap();
        assert!((lin.value - 1.0).abs() < 1e-12);

        let quad: Vec<(f64, f64)> = [1.0f64, 3.0, 5.0]
            .iter()
            .map(|&x| (x, 0.5 - 0.2 * x + 0.03 * x * x))
            .collect();
        let r = zne_extrapolate(&quad, &cfg(Extrapolator::Richardson)).unwrap();
        assert!((r.value - 0.5).abs() < 1e-10);

        let expo: Vec<(f64, f64)> = [1.0f64, 3.0, 5.0]
            .iter()
            .map(|&x| (x, -1.0 + 0.8 * (-0.3 * x).exp()))
            .collect();
        let e = zne_extrapolate(&expo, &cfg(Extrapolator::Exponential)).unwrap();
        assert!(e.diagnostic.is_none());
        assert!((e.value + 0.2).abs() < 1e-6, "{}", e.value);

        // growing data has no decaying fit
        let up = [(1.0, 1.0), (3.0, 2.0), (5.0, 4.5)];
        let f = zne_extrapolate(&up, &cfg(Extrapolator::Exponential)).unwrap();
        assert!(f.diagnostic.is_some());
    }

    #[test]
    fn extrapolation_input_checks() {
        let cfg = ZneConfig::default();
        assert!(zne_extrapolate(&[(1.0, 1.0)], &cfg).is_err());
        assert!(zne_extrapolate(&[(1.0, 1.0), (1.0, 2.0)], &cfg).is_err());
        let bad = ZneConfig {
            scale_factors: vec![1, 2],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ZneConfig {
            scale_factors: vec![3, 5],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn grouping_is_qubitwise_commuting() {
        let h = PauliSum::from_labels([
            ("II", 0.5),
            ("ZI", 1.0),
            ("ZZ", 1.0),
            ("XX", 0.3),
            ("YY", 0.2),
            ("IX", 0.1),
        ])
        .unwrap();
        let (c, groups) = measurement_groups(&h).unwrap();
        assert_eq!(c, 0.5);
        assert_eq!(groups.iter().map(|g| g.terms.len()).sum::<usize>(), 5);
        assert_eq!(groups.len(), 3);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
