//! Pauli strings in symplectic form and sums of them.
//!
//! A [`PauliTerm`] on `n` qubits is stored as two bit masks. Qubit `q`
//! carries the letter I/X/Z/Y for `(x_q, z_q)` = (0,0)/(1,0)/(0,1)/(1,1),
//! and the operator it denotes is `i^{|x & z|} X^x Z^z`, which makes every
//! term Hermitian. In labels qubit 0 is the leftmost character; in
//! statevector indices qubit 0 is the least significant bit.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::state::StateVector;

/// Coefficients below this magnitude are dropped by [`PauliSum::normalize`].
pub const DROP_TOLERANCE: f64 = 1e-12;

/// Largest imaginary residual tolerated in a Hermitian expectation value.
pub const IMAG_TOLERANCE: f64 = 1e-10;

pub const MAX_QUBITS: usize = 64;

/// A power of `i`: 0 → 1, 1 → i, 2 → −1, 3 → −i.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(power: u32) -> Phase {
        Phase((power % 4) as u8)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliTerm {
    n_qubits: usize,
    x: u64,
    z: u64,
}

#[inline]
fn parity(mask: u64) -> bool {
    mask.count_ones() & 1 == 1
}

#[inline]
fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl PauliTerm {
    pub fn new(n_qubits: usize, x_mask: u64, z_mask: u64) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::TooLarge(format!(
                "{n_qubits} qubits exceeds the {MAX_QUBITS}-qubit mask width"
            )));
        }
        let valid = low_mask(n_qubits);
        if x_mask & !valid != 0 || z_mask & !valid != 0 {
            return Err(Error::invalid(format!(
                "mask bits set beyond qubit {}",
                n_qubits.saturating_sub(1)
            )));
        }
        Ok(PauliTerm {
            n_qubits,
            x: x_mask,
            z: z_mask,
        })
    }

    pub fn identity(n_qubits: usize) -> Self {
        PauliTerm {
            n_qubits,
            x: 0,
            z: 0,
        }
    }

    /// Single-letter term `letter` on `qubit`.
    pub fn single(n_qubits: usize, qubit: usize, letter: char) -> Result<Self> {
        if qubit >= n_qubits {
            return Err(Error::invalid(format!(
                "qubit {qubit} out of range for {n_qubits} qubits"
            )));
        }
        let bit = 1u64 << qubit;
        let (x, z) = match letter {
            'I' => (0, 0),
            'X' => (bit, 0),
            'Y' => (bit, bit),
            'Z' => (0, bit),
            other => return Err(Error::invalid(format!("unknown Pauli letter {other:?}"))),
        };
        PauliTerm::new(n_qubits, x, z)
    }

    /// Parses a label such as `"XIZY"`; the leftmost character is qubit 0.
    pub fn from_label(label: &str) -> Result<Self> {
        if label.is_empty() {
            return Err(Error::format(0, 0, "empty Pauli label"));
        }
        let n = label.chars().count();
        if n > MAX_QUBITS {
            return Err(Error::TooLarge(format!("label of length {n}")));
        }
        let (mut x, mut z) = (0u64, 0u64);
        for (q, c) in label.chars().enumerate() {
            let bit = 1u64 << q;
            match c {
                'I' => {}
                'X' => x |= bit,
                'Z' => z |= bit,
                'Y' => {
                    x |= bit;
                    z |= bit;
                }
                other => {
                    return Err(Error::format(
                        0,
                        q,
                        format!("invalid Pauli letter {other:?}"),
                    ))
                }
            }
        }
        Ok(PauliTerm { n_qubits: n, x, z })
    }

    pub fn label(&self) -> String {
        (0..self.n_qubits).map(|q| self.letter(q)).collect()
    }

    pub fn letter(&self, qubit: usize) -> char {
        let bit = 1u64 << qubit;
        match (self.x & bit != 0, self.z & bit != 0) {
            (false, false) => 'I',
            (true, false) => 'X',
            (false, true) => 'Z',
            (true, true) => 'Y',
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    /// Qubits on which the term acts non-trivially.
    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> usize {
        self.support().count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    /// The number of Y letters, i.e. the power of `i` in `i^{|x&z|} X^x Z^z`.
    /// Number of `Y` factors.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Product `self · other` without the qubit-count check.
    #[inline]
    pub(crate) fn mul_unchecked(&self, other: &PauliTerm) -> (Phase, PauliTerm) {
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        // (i^a X^x1 Z^z1)(i^b X^x2 Z^z2) = i^{a+b} (-1)^{|z1&x2|} X^x Z^z
        let a = self.y_count();
        let b = other.y_count();
        let c = (x & z).count_ones();
        let swap = 2 * (self.z & other.x).count_ones();
        let power = (a + b + swap + 4 * 64 - c) % 4;
        (
            Phase::from_power(power),
            PauliTerm {
                n_qubits: self.n_qubits,
                x,
                z,
            },
        )
    }

    #[inline]
    pub(crate) fn commutes_unchecked(&self, other: &PauliTerm) -> bool {
        !parity((self.x & other.z) ^ (self.z & other.x))
    }

    /// Phase attached to the matrix element `⟨k ⊕ x| P |k⟩`.
    #[inline]
    pub(crate) fn column_phase(&self, k: usize) -> Complex64 {
        let sign = parity(self.z & k as u64);
        let power = self.y_count() + if sign { 2 } else { 0 };
        Phase::from_power(power).to_complex()
    }

    /// Restriction to qubits `[start, start + len)`, renumbered from 0.
    pub fn slice(&self, start: usize, len: usize) -> PauliTerm {
        let m = low_mask(len);
        PauliTerm {
            n_qubits: len,
            x: (self.x >> start) & m,
            z: (self.z >> start) & m,
        }
    }
}

impl PartialOrd for PauliTerm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PauliTerm {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.n_qubits, self.x, self.z).cmp(&(other.n_qubits, other.x, other.z))
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for PauliTerm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PauliTerm::from_label(s)
    }
}

/// Product of two Pauli terms: `a · b = phase · result`.
pub fn pauli_mul(a: &PauliTerm, b: &PauliTerm) -> Result<(Phase, PauliTerm)> {
    Error::check_dim(a.n_qubits, b.n_qubits)?;
    Ok(a.mul_unchecked(b))
}

pub fn commutes(a: &PauliTerm, b: &PauliTerm) -> Result<bool> {
    Error::check_dim(a.n_qubits, b.n_qubits)?;
    Ok(a.commutes_unchecked(b))
}

/// A complex linear combination of Pauli terms on a fixed number of qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<(Complex64, PauliTerm)>,
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Self {
        PauliSum {
            n_qubits,
            terms: Vec::new(),
        }
    }

    pub fn identity(n_qubits: usize, coefficient: f64) -> Self {
        let mut s = PauliSum::new(n_qubits);
        s.terms.push((
            Complex64::new(coefficient, 0.0),
            PauliTerm::identity(n_qubits),
        ));
        s
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Complex64, PauliTerm)>,
    {
        let mut s = PauliSum::new(n_qubits);
        for (c, t) in terms {
            s.push(c, t)?;
        }
        Ok(s)
    }

    /// Real-coefficient sum from `(label, coefficient)` pairs.
    pub fn from_labels<'a, I>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut out: Option<PauliSum> = None;
        for (label, c) in terms {
            let t = PauliTerm::from_label(label)?;
            let s = out.get_or_insert_with(|| PauliSum::new(t.n_qubits()));
            s.push(Complex64::new(c, 0.0), t)?;
        }
        out.ok_or_else(|| Error::invalid("no terms"))
    }

    pub fn push(&mut self, coefficient: Complex64, term: PauliTerm) -> Result<()> {
        Error::check_dim(self.n_qubits, term.n_qubits())?;
        self.terms.push((coefficient, term));
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(Complex64, PauliTerm)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Merges duplicate terms, drops coefficients below [`DROP_TOLERANCE`]
    /// and sorts terms by their masks.
    pub fn normalize(&mut self) {
        self.terms.sort_by_key(|a| a.1);
        let mut merged: Vec<(Complex64, PauliTerm)> = Vec::with_capacity(self.terms.len());
        for (c, t) in self.terms.drain(..) {
            match merged.last_mut() {
                Some((acc, last)) if *last == t => *acc += c,
                _ => merged.push((c, t)),
            }
        }
        merged.retain(|(c, _)| c.norm() >= DROP_TOLERANCE);
        self.terms = merged;
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    /// Coefficient of the identity term (summed over duplicates).
    pub fn constant(&self) -> Complex64 {
        self.terms
            .iter()
            .filter(|(_, t)| t.is_identity())
            .map(|(c, _)| *c)
            .sum()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(c, t)| (c * factor, *t)).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(c, t)| (c.conj(), *t)).collect(),
        }
    }

    pub fn add(&self, other: &PauliSum) -> Result<Self> {
        Error::check_dim(self.n_qubits, other.n_qubits)?;
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Ok(PauliSum {
            n_qubits: self.n_qubits,
            terms,
        }
        .normalized())
    }

    /// Operator product `self · other`, normalized.
    pub fn mul(&self, other: &PauliSum) -> Result<Self> {
        Error::check_dim(self.n_qubits, other.n_qubits)?;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ca, a) in &self.terms {
            for (cb, b) in &other.terms {
                let (phase, t) = a.mul_unchecked(b);
                terms.push((ca * cb * phase.to_complex(), t));
            }
        }
        Ok(PauliSum {
            n_qubits: self.n_qubits,
            terms,
        }
        .normalized())
    }

    /// True when every coefficient is real to within `tol`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.clone()
            .normalized()
            .terms
            .iter()
            .all(|(c, _)| c.im.abs() <= tol)
    }

    /// True when every coefficient is imaginary to within `tol`.
    pub fn is_anti_hermitian(&self, tol: f64) -> bool {
        self.clone()
            .normalized()
            .terms
            .iter()
            .all(|(c, _)| c.re.abs() <= tol)
    }

    /// Union of the supports of all terms.
    pub fn support(&self) -> u64 {
        self.terms.iter().fold(0, |acc, (_, t)| acc | t.support())
    }

    pub fn all_commute(&self) -> bool {
        self.terms.iter().enumerate().all(|(i, (_, a))| {
            self.terms[i + 1..]
                .iter()
                .all(|(_, b)| a.commutes_unchecked(b))
        })
    }

    /// Matrix-free `H |ψ⟩` on raw amplitudes.
    pub fn apply(&self, amplitudes: &[Complex64]) -> Result<Vec<Complex64>> {
        Error::check_dim(1usize << self.n_qubits, amplitudes.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); amplitudes.len()];
        for (c, t) in &self.terms {
            let x = t.x_mask() as usize;
            for (k, a) in amplitudes.iter().enumerate() {
                out[k ^ x] += c * t.column_phase(k) * a;
            }
        }
        Ok(out)
    }

    /// `⟨ψ|H|ψ⟩` for a Hermitian sum, evaluated term by term.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        Error::check_dim(self.n_qubits, state.n_qubits())?;
        if let Some((c, t)) = self.terms.iter().find(|(c, _)| c.im.abs() > IMAG_TOLERANCE) {
            return Err(Error::NotHermitian(format!("term {t} has coefficient {c}")));
        }
        let amps = state.amplitudes();
        let contribution =
            |(c, t): &(Complex64, PauliTerm)| -> Complex64 { c * term_expectation(t, amps) };
        // Fixed-order summation keeps the result independent of thread count.
        let parts: Vec<Complex64> = if self.terms.len() >= 64 && state.n_qubits() >= 8 {
            self.terms.par_iter().map(contribution).collect()
        } else {
            self.terms.iter().map(contribution).collect()
        };
        let total: Complex64 = parts.into_iter().sum();
        if total.im.abs() > IMAG_TOLERANCE {
            return Err(Error::NotHermitian(format!(
                "expectation has imaginary part {}",
                total.im
            )));
        }
        Ok(total.re)
    }

    /// Renders the sum in the line-oriented text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (c, t) in &self.terms {
            if c.im == 0.0 && !c.im.is_sign_negative() {
                out.push_str(&format!("{} {:?}\n", t.label(), c.re));
            } else {
                out.push_str(&format!("{} {:?} {:?}\n", t.label(), c.re, c.im));
            }
        }
        out
    }

    /// Parses the text format: one `<label> <real> [<imag>]` term per line,
    /// `#` starts a comment, blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut sum: Option<PauliSum> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let content = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            };
            let fields: Vec<&str> = content.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() < 2 || fields.len() > 3 {
                return Err(Error::format(
                    line_no,
                    0,
                    format!(
                        "expected `<label> <real> [<imag>]`, found {} fields",
                        fields.len()
                    ),
                ));
            }
            let term = PauliTerm::from_label(fields[0]).map_err(|e| match e {
                Error::Format {
                    position, message, ..
                } => Error::format(line_no, position, message),
                other => other,
            })?;
            let re = parse_real(fields[1], line_no, 1)?;
            let im = match fields.get(2) {
                Some(f) => parse_real(f, line_no, 2)?,
                None => 0.0,
            };
            let s = sum.get_or_insert_with(|| PauliSum::new(term.n_qubits()));
            if s.n_qubits != term.n_qubits() {
                return Err(Error::format(
                    line_no,
                    0,
                    format!(
                        "label length {} differs from earlier labels ({})",
                        term.n_qubits(),
                        s.n_qubits
                    ),
                ));
            }
            s.terms.push((Complex64::new(re, im), term));
        }
        sum.ok_or_else(|| Error::format(0, 0, "no Pauli terms found"))
    }
}

fn parse_real(field: &str, line: usize, column: usize) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::format(line, column, format!("invalid number {field:?}")))?;
    if !v.is_finite() {
        return Err(Error::format(
            line,
            column,
            format!("non-finite number {field:?}"),
        ));
    }
    Ok(v)
}

/// `⟨ψ|P|ψ⟩` for a single Pauli term.
pub(crate) fn term_expectation(t: &PauliTerm, amps: &[Complex64]) -> Complex64 {
    let x = t.x_mask() as usize;
    let z = t.z_mask();
    if x == 0 {
        let mut acc = 0.0;
        for (k, a) in amps.iter().enumerate() {
            let p = a.norm_sqr();
            if parity(z & k as u64) {
                acc -= p;
            } else {
                acc += p;
            }
        }
        return Complex64::new(acc, 0.0);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, a) in amps.iter().enumerate() {
        let b = amps[k ^ x].conj() * a;
        if parity(z & k as u64) {
            acc -= b;
        } else {
            acc += b;
        }
    }
    acc * Phase::from_power(t.y_count()).to_complex()
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for PauliSum {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PauliSum::parse(s)
    }
}

/// `⟨ψ|[H, A]|ψ⟩` for Hermitian `h` and anti-Hermitian `a`.
///
/// With `A† = −A` this equals `2 Re ⟨Hψ|Aψ⟩`, the derivative of
/// `⟨ψ|e^{−θA} H e^{θA}|ψ⟩` at `θ = 0`.
pub fn commutator_expectation(h: &PauliSum, a: &PauliSum, state: &StateVector) -> Result<f64> {
    Error::check_dim(h.n_qubits(), state.n_qubits())?;
    Error::check_dim(a.n_qubits(), state.n_qubits())?;
    if !a.is_anti_hermitian(IMAG_TOLERANCE) {
        return Err(Error::invalid(
            "commutator generator must be anti-Hermitian (purely imaginary coefficients)",
        ));
    }
    let h_psi = h.apply(state.amplitudes())?;
    commutator_expectation_with(&h_psi, a, state)
}

/// Same as [`commutator_expectation`] with `H|ψ⟩` precomputed.
pub(crate) fn commutator_expectation_with(
    h_psi: &[Complex64],
    a: &PauliSum,
    state: &StateVector,
) -> Result<f64> {
    let a_psi = a.apply(state.amplitudes())?;
    let overlap: Complex64 = h_psi.iter().zip(&a_psi).map(|(h, a)| h.conj() * a).sum();
    Ok(2.0 * overlap.re)
}
