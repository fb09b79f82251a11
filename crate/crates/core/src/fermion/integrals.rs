//! Spatial-orbital integrals, the FCIDUMP interchange format and frozen-core
//! active-space reduction.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// One- and two-electron integrals over `n_spatial` real orbitals.
///
/// `h2` is stored in chemists' notation: `h2(i,j,k,l) = (ij|kl)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MolecularIntegrals {
    n_spatial: usize,
    n_electrons: usize,
    ms2: i64,
    core_energy: f64,
    h1: Vec<f64>,
    h2: Vec<f64>,
}

impl MolecularIntegrals {
    /// Validates the permutation symmetries and wraps the tensors.
    pub fn new(
        n_spatial: usize,
        n_electrons: usize,
        core_energy: f64,
        h1: Vec<f64>,
        h2: Vec<f64>,
    ) -> Result<Self> {
        let n = n_spatial;
        Error::check_dim(n * n, h1.len())?;
        Error::check_dim(n * n * n * n, h2.len())?;
        if n_electrons > 2 * n {
            return Err(Error::invalid(format!(
                "{n_electrons} electrons do not fit in {n} spatial orbitals"
            )));
        }
        let ints = MolecularIntegrals {
            n_spatial,
            n_electrons,
            ms2: 0,
            core_energy,
            h1,
            h2,
        };
        ints.check_symmetry()?;
        Ok(ints)
    }

    fn check_symmetry(&self) -> Result<()> {
        let n = self.n_spatial;
        if self.h1.iter().chain(&self.h2).any(|v| !v.is_finite()) || !self.core_energy.is_finite() {
            return Err(Error::invalid("non-finite integral"));
        }
        for i in 0..n {
            for j in 0..n {
                if (self.h1(i, j) - self.h1(j, i)).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::invalid(format!("h1 not symmetric at ({i},{j})")));
                }
                for k in 0..n {
                    for l in 0..n {
                        let v = self.h2(i, j, k, l);
                        for w in [
                            self.h2(j, i, k, l),
                            self.h2(i, j, l, k),
                            self.h2(k, l, i, j),
                        ] {
                            if (v - w).abs() > SYMMETRY_TOLERANCE {
                                return Err(Error::invalid(format!(
                                    "h2 lacks 8-fold symmetry at ({i}{j}|{k}{l})"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_spatial(&self) -> usize {
        self.n_spatial
    }

    pub fn n_electrons(&self) -> usize {
        self.n_electrons
    }

    /// `2·S_z` (alpha minus beta electrons).
    pub fn ms2(&self) -> i64 {
        self.ms2
    }

    pub fn with_ms2(mut self, ms2: i64) -> Result<Self> {
        let (up, down) = spin_counts(self.n_electrons, ms2)?;
        if up > self.n_spatial || down > self.n_spatial {
            return Err(Error::invalid("spin counts exceed orbital count"));
        }
        self.ms2 = ms2;
        Ok(self)
    }

    /// Electrons per spin `(n_up, n_down)`.
    pub fn spin_counts(&self) -> (usize, usize) {
        spin_counts(self.n_electrons, self.ms2).expect("validated at construction")
    }

    pub fn core_energy(&self) -> f64 {
        self.core_energy
    }

    #[inline]
    pub fn h1(&self, i: usize, j: usize) -> f64 {
        self.h1[i * self.n_spatial + j]
    }

    /// `(ij|kl)`.
    #[inline]
    pub fn h2(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n_spatial;
        self.h2[((i * n + j) * n + k) * n + l]
    }

    /// Restricted closed/open-shell Hartree–Fock energy of the lowest
    /// `n_up` / `n_down` orbitals.
    pub fn hartree_fock_energy(&self) -> f64 {
        let (up, down) = self.spin_counts();
        let mut e = self.core_energy;
        for count in [up, down] {
            for i in 0..count {
                e += self.h1(i, i);
            }
        }
        // Coulomb over all spin pairs, exchange within each spin.
        for (na, nb) in [(up, up), (down, down), (up, down), (down, up)] {
            for i in 0..na {
                for j in 0..nb {
                    e += 0.5 * self.h2(i, i, j, j);
                }
            }
        }
        for count in [up, down] {
            for i in 0..count {
                for j in 0..count {
                    e -= 0.5 * self.h2(i, j, j, i);
                }
            }
        }
        e
    }
}

fn spin_counts(n_electrons: usize, ms2: i64) -> Result<(usize, usize)> {
    let n = n_electrons as i64;
    if (n + ms2) % 2 != 0 || ms2.abs() > n {
        return Err(Error::invalid(format!(
            "MS2={ms2} inconsistent with {n_electrons} electrons"
        )));
    }
    Ok((((n + ms2) / 2) as usize, ((n - ms2) / 2) as usize))
}

struct Token<'a> {
    text: &'a str,
    line: usize,
}

fn header_end(text: &str) -> Option<(usize, usize)> {
    let upper = text.to_ascii_uppercase();
    let slash = upper.find('/').map(|p| (p, p + 1));
    let end = ["&END", "$END"]
        .iter()
        .filter_map(|m| upper.find(m).map(|p| (p, p + m.len())))
        .min();
    match (slash, end) {
        (Some(a), Some(b)) => Some(if a.0 < b.0 { a } else { b }),
        (a, b) => a.or(b),
    }
}

fn parse_header(header: &str) -> Result<(usize, usize, i64)> {
    // Glue `KEY = VALUE` into `KEY=VALUE` so whitespace around '=' is harmless.
    let mut glued = String::with_capacity(header.len());
    for part in header.split('=') {
        if !glued.is_empty() {
            glued.truncate(glued.trim_end().len());
            glued.push('=');
            glued.push_str(part.trim_start());
        } else {
            glued.push_str(part);
        }
    }
    let mut keys: Vec<(String, Vec<String>)> = Vec::new();
    for item in glued.split(|c: char| c == ',' || c.is_whitespace()) {
        if item.is_empty() {
            continue;
        }
        if let Some((k, v)) = item.split_once('=') {
            let mut vals = Vec::new();
            if !v.is_empty() {
                vals.push(v.to_string());
            }
            keys.push((k.to_ascii_uppercase(), vals));
        } else if let Some(last) = keys.last_mut() {
            last.1.push(item.to_string());
        } else {
            return Err(Error::format(
                1,
                0,
                format!("unexpected header item {item:?}"),
            ));
        }
    }
    let get = |name: &str| -> Result<Option<i64>> {
        match keys.iter().find(|(k, _)| k == name) {
            None => Ok(None),
            Some((_, v)) => {
                let first = v
                    .first()
                    .ok_or_else(|| Error::format(1, 0, format!("{name} has no value")))?;
                first
                    .parse::<i64>()
                    .map(Some)
                    .map_err(|_| Error::format(1, 0, format!("{name}={first:?} is not an integer")))
            }
        }
    };
    let norb = get("NORB")?.ok_or_else(|| Error::format(1, 0, "header lacks NORB"))?;
    let nelec = get("NELEC")?.ok_or_else(|| Error::format(1, 0, "header lacks NELEC"))?;
    let ms2 = get("MS2")?.unwrap_or(0);
    if norb <= 0 || nelec < 0 {
        return Err(Error::format(
            1,
            0,
            "NORB must be positive and NELEC non-negative",
        ));
    }
    Ok((norb as usize, nelec as usize, ms2))
}

/// Parses Molpro-style FCIDUMP text.
///
/// Every listed value is written to all of its permutation-symmetric images;
/// conflicting duplicates are rejected.
pub fn parse_fcidump(text: &str) -> Result<MolecularIntegrals> {
    let start = text
        .to_ascii_uppercase()
        .find("&FCI")
        .ok_or_else(|| Error::format(1, 0, "missing &FCI header"))?;
    let after = &text[start + 4..];
    let (hdr_len, body_start) =
        header_end(after).ok_or_else(|| Error::format(1, 0, "unterminated &FCI header"))?;
    let (norb, nelec, ms2) = parse_header(&after[..hdr_len])?;
    if norb > 64 {
        return Err(Error::TooLarge(format!("NORB={norb}")));
    }
    let header_lines = text[..start + 4 + body_start].matches('\n').count();
    let body = &after[body_start..];
    let tokens: Vec<Token> = body
        .lines()
        .enumerate()
        .flat_map(|(i, l)| {
            l.split_whitespace().map(move |t| Token {
                text: t,
                line: header_lines + i + 1,
            })
        })
        .collect();
    if !tokens.len().is_multiple_of(5) {
        let line = tokens.last().map_or(0, |t| t.line);
        return Err(Error::format(
            line,
            0,
            "integral records must have 5 fields",
        ));
    }

    let n = norb;
    let mut h1 = vec![0.0; n * n];
    let mut h1_set = vec![false; n * n];
    let mut h2 = vec![0.0; n * n * n * n];
    let mut h2_set = vec![false; n * n * n * n];
    let mut core: Option<f64> = None;

    let put =
        |values: &mut [f64], set: &mut [bool], idx: usize, v: f64, line: usize| -> Result<()> {
            if set[idx] && (values[idx] - v).abs() > SYMMETRY_TOLERANCE {
                return Err(Error::format(
                    line,
                    0,
                    format!("conflicting duplicate integral: {} vs {v}", values[idx]),
                ));
            }
            values[idx] = v;
            set[idx] = true;
            Ok(())
        };

    for rec in tokens.chunks(5) {
        let line = rec[0].line;
        let value: f64 = rec[0]
            .text
            .replace(['D', 'd'], "e")
            .parse()
            .map_err(|_| Error::format(line, 0, format!("invalid value {:?}", rec[0].text)))?;
        if !value.is_finite() {
            return Err(Error::format(line, 0, "non-finite integral value"));
        }
        let mut idx = [0usize; 4];
        for (slot, tok) in rec[1..].iter().enumerate() {
            let v: usize = tok.text.parse().map_err(|_| {
                Error::format(line, slot + 1, format!("invalid index {:?}", tok.text))
            })?;
            if v > n {
                return Err(Error::format(
                    line,
                    slot + 1,
                    format!("index {v} out of range 0..={n}"),
                ));
            }
            idx[slot] = v;
        }
        match idx {
            [0, 0, 0, 0] => {
                if let Some(c) = core {
                    if (c - value).abs() > SYMMETRY_TOLERANCE {
                        return Err(Error::format(line, 0, "conflicting core energy entries"));
                    }
                }
                core = Some(value);
            }
            [i, j, 0, 0] if i > 0 && j > 0 => {
                let (i, j) = (i - 1, j - 1);
                put(&mut h1, &mut h1_set, i * n + j, value, line)?;
                put(&mut h1, &mut h1_set, j * n + i, value, line)?;
            }
            [_, 0, 0, 0] => {
                // orbital energy record; not needed
            }
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => {
                let (i, j, k, l) = (i - 1, j - 1, k - 1, l - 1);
                for (a, b, c, d) in [
                    (i, j, k, l),
                    (j, i, k, l),
                    (i, j, l, k),
                    (j, i, l, k),
                    (k, l, i, j),
                    (l, k, i, j),
                    (k, l, j, i),
                    (l, k, j, i),
                ] {
                    put(
                        &mut h2,
                        &mut h2_set,
                        ((a * n + b) * n + c) * n + d,
                        value,
                        line,
                    )?;
                }
            }
            _ => {
                return Err(Error::format(
                    line,
                    1,
                    format!("unrecognized index pattern {idx:?}"),
                ))
            }
        }
    }
    MolecularIntegrals::new(n, nelec, core.unwrap_or(0.0), h1, h2)?.with_ms2(ms2)
}

/// Writes FCIDUMP text listing each symmetry-unique non-zero integral once.
pub fn render_fcidump(ints: &MolecularIntegrals) -> String {
    let n = ints.n_spatial;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "&FCI NORB={n},NELEC={},MS2={},\n ORBSYM={}\n ISYM=1,\n&END",
        ints.n_electrons,
        ints.ms2,
        "1,".repeat(n)
    );
    let pair = |a: usize, b: usize| a * (a + 1) / 2 + b;
    for i in 0..n {
        for j in 0..=i {
            for k in 0..n {
                for l in 0..=k {
                    if pair(i, j) < pair(k, l) {
                        continue;
                    }
                    let v = ints.h2(i, j, k, l);
                    if v != 0.0 {
                        let _ = writeln!(out, "{v:?} {} {} {} {}", i + 1, j + 1, k + 1, l + 1);
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..=i {
            let v = ints.h1(i, j);
            if v != 0.0 {
                let _ = writeln!(out, "{v:?} {} {} 0 0", i + 1, j + 1);
            }
        }
    }
    let _ = writeln!(out, "{:?} 0 0 0 0", ints.core_energy);
    out
}

/// Frozen-core / active-orbital selection (0-based spatial indices).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveSpaceSpec {
    pub frozen_occupied: Vec<usize>,
    pub active: Vec<usize>,
    /// Optional; when present it must equal `M − 2·|frozen|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_active_electrons: Option<usize>,
}

impl ActiveSpaceSpec {
    pub fn new(frozen_occupied: Vec<usize>, active: Vec<usize>) -> Self {
        ActiveSpaceSpec {
            frozen_occupied,
            active,
            n_active_electrons: None,
        }
    }

    /// Checks the selection against `ints` and returns the active electron count.
    pub fn validate(&self, ints: &MolecularIntegrals) -> Result<usize> {
        let n = ints.n_spatial();
        let mut seen = vec![false; n];
        for &o in self.frozen_occupied.iter().chain(&self.active) {
            if o >= n {
                return Err(Error::invalid(format!("orbital {o} out of range (N={n})")));
            }
            if seen[o] {
                return Err(Error::invalid(format!(
                    "orbital {o} listed twice (frozen and active sets must be disjoint)"
                )));
            }
            seen[o] = true;
        }
        let frozen_electrons = 2 * self.frozen_occupied.len();
        if frozen_electrons > ints.n_electrons() {
            return Err(Error::invalid(format!(
                "freezing {} orbitals leaves a negative active electron count",
                self.frozen_occupied.len()
            )));
        }
        let m = ints.n_electrons() - frozen_electrons;
        if let Some(declared) = self.n_active_electrons {
            if declared != m {
                return Err(Error::invalid(format!(
                    "declared {declared} active electrons, but M - 2*frozen = {m}"
                )));
            }
        }
        if m > 2 * self.active.len() {
            return Err(Error::invalid(format!(
                "{m} active electrons do not fit in {} active orbitals",
                self.active.len()
            )));
        }
        Ok(m)
    }
}

/// Folds frozen doubly-occupied orbitals into the core energy and an
/// effective one-body operator, and restricts all tensors to `active`.
pub fn apply_active_space(
    ints: &MolecularIntegrals,
    spec: &ActiveSpaceSpec,
) -> Result<MolecularIntegrals> {
    let m = spec.validate(ints)?;
    let frozen = &spec.frozen_occupied;
    let mut core = ints.core_energy();
    for &i in frozen {
        core += 2.0 * ints.h1(i, i);
        for &j in frozen {
            core += 2.0 * ints.h2(i, i, j, j) - ints.h2(i, j, j, i);
        }
    }
    let act = &spec.active;
    let na = act.len();
    let mut h1 = vec![0.0; na * na];
    for (a, &p) in act.iter().enumerate() {
        for (b, &q) in act.iter().enumerate() {
            let mut v = ints.h1(p, q);
            for &i in frozen {
                v += 2.0 * ints.h2(p, q, i, i) - ints.h2(p, i, i, q);
            }
            h1[a * na + b] = v;
        }
    }
    let mut h2 = vec![0.0; na * na * na * na];
    for (a, &p) in act.iter().enumerate() {
        for (b, &q) in act.iter().enumerate() {
            for (c, &r) in act.iter().enumerate() {
                for (d, &s) in act.iter().enumerate() {
                    h2[((a * na + b) * na + c) * na + d] = ints.h2(p, q, r, s);
                }
            }
        }
    }
    // Symmetrize the folded one-body part against round-off.
    for a in 0..na {
        for b in 0..a {
            let v = 0.5 * (h1[a * na + b] + h1[b * na + a]);
            h1[a * na + b] = v;
            h1[b * na + a] = v;
        }
    }
    MolecularIntegrals::new(na, m, core, h1, h2)?.with_ms2(ints.ms2())
}
