//! Run configuration: JSON schema, unknown-key screening, flag overrides
//! and resolution of method-dependent defaults.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use vqe_forge_core::adapt::AdaptConfig;
use vqe_forge_core::circuit::CircuitSpec;
use vqe_forge_core::fermion::{ActiveSpaceSpec, MappingKind};
use vqe_forge_core::forging::ForgedConfig;
use vqe_forge_core::mitigation::{NoiseConfig, TrexConfig, ZneConfig};
use vqe_forge_core::optim::OptimizerConfig;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Diag,
    Vqe,
    Vanilla,
    Adapt,
    DoubleAdapt,
    Tetris,
    Forge,
    ZneExperiment,
    TrexExperiment,
    Mitigation,
    Compare,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::Diag,
        Method::Vqe,
        Method::Vanilla,
        Method::Adapt,
        Method::DoubleAdapt,
        Method::Tetris,
        Method::Forge,
        Method::ZneExperiment,
        Method::TrexExperiment,
        Method::Mitigation,
        Method::Compare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Diag => "diag",
            Method::Vqe => "vqe",
            Method::Vanilla => "vanilla",
            Method::Adapt => "adapt",
            Method::DoubleAdapt => "double-adapt",
            Method::Tetris => "tetris",
            Method::Forge => "forge",
            Method::ZneExperiment => "zne-experiment",
            Method::TrexExperiment => "trex-experiment",
            Method::Mitigation => "mitigation",
            Method::Compare => "compare",
        }
    }

    pub fn is_experiment(self) -> bool {
        matches!(
            self,
            Method::ZneExperiment | Method::TrexExperiment | Method::Mitigation
        )
    }

    /// Methods that need an excitation pool.
    pub fn needs_molecule(self) -> bool {
        matches!(
            self,
            Method::Vanilla | Method::Adapt | Method::DoubleAdapt | Method::Tetris | Method::Forge
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method {s:?}"))
    }
}

/// Exactly one of `fcidump`, `pauli` or `bundled`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fcidump: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pauli: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundled: Option<String>,
    /// FCIDUMP sources only; bundled instances carry their own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_space: Option<ActiveSpaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping: Option<MappingKind>,
}

impl HamiltonianSource {
    pub fn is_fermionic(&self) -> bool {
        self.pauli.is_none()
    }
}

/// Thresholds for the adaptive methods; the optimizer block is shared.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptBlock {
    pub eps_double: f64,
    pub eps_single: f64,
    pub eps_adapt: f64,
    pub max_operators: usize,
}

impl Default for AdaptBlock {
    fn default() -> Self {
        let d = AdaptConfig::default();
        AdaptBlock {
            eps_double: d.eps_double,
            eps_single: d.eps_single,
            eps_adapt: d.eps_adapt,
            max_operators: d.max_operators,
        }
    }
}

impl AdaptBlock {
    pub fn with_optimizer(&self, optimizer: &OptimizerConfig) -> AdaptConfig {
        AdaptConfig {
            eps_double: self.eps_double,
            eps_single: self.eps_single,
            eps_adapt: self.eps_adapt,
            max_operators: self.max_operators,
            optimizer: optimizer.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AnsatzSpec {
    /// Every pool excitation of the molecular problem.
    Uccsd,
    Circuit(CircuitSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentBlock {
    /// Seeds `seed, seed + 1, …` run by a mitigation experiment.
    pub trials: usize,
}

impl Default for ExperimentBlock {
    fn default() -> Self {
        ExperimentBlock { trials: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareBlock {
    pub methods: Vec<Method>,
}

impl Default for CompareBlock {
    fn default() -> Self {
        CompareBlock {
            methods: vec![
                Method::Vanilla,
                Method::Adapt,
                Method::DoubleAdapt,
                Method::Tetris,
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub hamiltonian: HamiltonianSource,
    pub method: Method,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adapt: Option<AdaptBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ansatz: Option<AnsatzSpec>,
    /// Initial basis state, qubit 0 first. Defaults to Hartree–Fock for
    /// molecular sources and all zeros for Pauli sources.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zne: Option<ZneConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trex: Option<TrexConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forging: Option<ForgedConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareBlock>,
    /// Write wall-clock times into `trace.csv` (breaks byte-identical reruns).
    #[serde(default)]
    pub trace_timing: bool,
}

/// Known keys per object path, for unknown-key warnings.
const KNOWN_KEYS: &[(&str, &[&str])] = &[
    (
        "",
        &[
            "hamiltonian",
            "method",
            "seed",
            "output",
            "optimizer",
            "adapt",
            "ansatz",
            "reference",
            "noise",
            "zne",
            "trex",
            "experiment",
            "forging",
            "compare",
            "trace_timing",
        ],
    ),
    (
        "/hamiltonian",
        &["fcidump", "pauli", "bundled", "active_space", "mapping"],
    ),
    (
        "/hamiltonian/active_space",
        &["frozen_occupied", "active", "n_active_electrons"],
    ),
    (
        "/optimizer",
        &[
            "learning_rate",
            "beta1",
            "beta2",
            "epsilon",
            "max_iterations",
            "tolerance",
            "patience",
            "initial_parameters",
        ],
    ),
    (
        "/adapt",
        &["eps_double", "eps_single", "eps_adapt", "max_operators"],
    ),
    ("/noise", &["p2", "p01", "p10"]),
    ("/zne", &["scale_factors", "extrapolator", "shots", "seed"]),
    ("/trex", &["calibration_shots", "f_min"]),
    ("/experiment", &["trials"]),
    (
        "/forging",
        &["bitstrings", "schmidt_coeffs", "half_circuit"],
    ),
    ("/compare", &["methods"]),
];

/// Closest known key, if any is plausibly what was meant.
pub fn suggest<'a>(key: &str, known: &[&'a str]) -> Option<&'a str> {
    known
        .iter()
        .map(|k| (strsim::damerau_levenshtein(key, k), *k))
        .filter(|(d, k)| *d <= 3.max(k.len() / 3))
        .min()
        .map(|(_, k)| k)
}

/// Removes unknown keys from `value`, returning one warning per key.
pub fn strip_unknown_keys(value: &mut Value) -> Vec<String> {
    let mut warnings = Vec::new();
    for (path, known) in KNOWN_KEYS {
        let obj = if path.is_empty() {
            value.as_object_mut()
        } else {
            value.pointer_mut(path).and_then(Value::as_object_mut)
        };
        let Some(obj) = obj else { continue };
        let unknown: Vec<String> = obj
            .keys()
            .filter(|k| !known.contains(&k.as_str()))
            .cloned()
            .collect();
        for k in unknown {
            obj.remove(&k);
            let hint = match suggest(&k, known) {
                Some(s) => format!("; did you mean \"{s}\"?"),
                None => String::new(),
            };
            warnings.push(format!("unknown key {path}/{k} ignored{hint}"));
        }
    }
    warnings
}

/// Command-line overrides applied on top of the JSON document.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub method: Option<Method>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub pauli: Option<PathBuf>,
    pub fcidump: Option<PathBuf>,
    pub bundled: Option<String>,
    pub mapping: Option<MappingKind>,
    pub max_iterations: Option<usize>,
    pub trace_timing: bool,
    /// `(JSON pointer, value)` pairs.
    pub set: Vec<(String, Value)>,
}

fn set_pointer(root: &mut Value, pointer: &str, v: Value) -> Result<(), CliError> {
    if !pointer.starts_with('/') {
        return Err(CliError::config(
            pointer,
            "override paths must start with '/'",
        ));
    }
    let mut cur = root;
    let parts: Vec<&str> = pointer[1..].split('/').collect();
    for (i, part) in parts.iter().enumerate() {
        if !cur.is_object() {
            return Err(CliError::config(
                pointer,
                "path runs through a non-object value",
            ));
        }
        let obj = cur.as_object_mut().expect("checked above");
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), v);
            return Ok(());
        }
        cur = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

impl Overrides {
    pub fn apply(&self, doc: &mut Value) -> Result<(), CliError> {
        if !doc.is_object() {
            return Err(CliError::config("", "configuration must be a JSON object"));
        }
        let mut set = |p: &str, v: Value| set_pointer(doc, p, v);
        if let Some(m) = self.method {
            set("/method", Value::from(m.name()))?;
        }
        if let Some(s) = self.seed {
            set("/seed", Value::from(s))?;
        }
        if let Some(o) = &self.output {
            set("/output", Value::from(o.to_string_lossy().into_owned()))?;
        }
        let sources = [
            (
                "fcidump",
                self.fcidump
                    .as_ref()
                    .map(|p| p.to_string_lossy().into_owned()),
            ),
            (
                "pauli",
                self.pauli
                    .as_ref()
                    .map(|p| p.to_string_lossy().into_owned()),
            ),
            ("bundled", self.bundled.clone()),
        ];
        if sources.iter().any(|s| s.1.is_some()) {
            let mut h = Map::new();
            if let Some(old) = doc.get("hamiltonian").and_then(Value::as_object) {
                for key in ["mapping", "active_space"] {
                    if let Some(v) = old.get(key) {
                        h.insert(key.into(), v.clone());
                    }
                }
            }
            for (k, v) in sources {
                if let Some(v) = v {
                    h.insert(k.into(), Value::from(v));
                }
            }
            doc["hamiltonian"] = Value::Object(h);
        }
        let mut set = |p: &str, v: Value| set_pointer(doc, p, v);
        if let Some(m) = self.mapping {
            set(
                "/hamiltonian/mapping",
                serde_json::to_value(m).expect("enum serializes"),
            )?;
        }
        if let Some(n) = self.max_iterations {
            set("/optimizer/max_iterations", Value::from(n))?;
        }
        if self.trace_timing {
            set("/trace_timing", Value::Bool(true))?;
        }
        for (p, v) in &self.set {
            set(p, v.clone())?;
        }
        Ok(())
    }
}

/// Parsed configuration plus the warnings raised while reading it.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub config: RunConfig,
    pub warnings: Vec<String>,
}

/// Parses a configuration document, applying `overrides` first.
pub fn load(text: &str, overrides: &Overrides) -> Result<Loaded, CliError> {
    let mut doc: Value = serde_json::from_str(text)
        .map_err(|e| CliError::config("", format!("invalid JSON: {e}")))?;
    overrides.apply(&mut doc)?;
    let warnings = strip_unknown_keys(&mut doc);
    let config: RunConfig = serde_path_to_error::deserialize(doc).map_err(|e| {
        let path = e.path().to_string();
        let pointer = if path == "." {
            String::new()
        } else {
            format!("/{}", path.replace('.', "/"))
        };
        CliError::config(pointer, e.into_inner().to_string())
    })?;
    let config = config.resolve()?;
    Ok(Loaded { config, warnings })
}

impl RunConfig {
    /// Fills method-dependent defaults and checks required blocks.
    pub fn resolve(mut self) -> Result<RunConfig, CliError> {
        let h = &mut self.hamiltonian;
        let n_sources = [h.fcidump.is_some(), h.pauli.is_some(), h.bundled.is_some()]
            .iter()
            .filter(|b| **b)
            .count();
        if n_sources != 1 {
            return Err(CliError::config(
                "/hamiltonian",
                format!("exactly one of fcidump, pauli or bundled is required, found {n_sources}"),
            ));
        }
        if h.pauli.is_some() {
            if h.mapping.is_some() || h.active_space.is_some() {
                return Err(CliError::config(
                    "/hamiltonian",
                    "mapping and active_space apply to molecular sources only",
                ));
            }
        } else if h.bundled.is_some() && h.active_space.is_some() {
            return Err(CliError::config(
                "/hamiltonian/active_space",
                "bundled instances define their own active space",
            ));
        } else if h.mapping.is_none() {
            h.mapping = Some(if self.method == Method::Forge {
                MappingKind::JordanWigner
            } else {
                MappingKind::ParityReduced
            });
        }
        let molecular = self.hamiltonian.is_fermionic();
        let methods: Vec<Method> = match self.method {
            Method::Compare => {
                let c = self.compare.get_or_insert_with(CompareBlock::default);
                if c.methods.is_empty() {
                    return Err(CliError::config(
                        "/compare/methods",
                        "at least one method is required",
                    ));
                }
                if let Some(m) = c
                    .methods
                    .iter()
                    .find(|m| matches!(m, Method::Compare) || m.is_experiment())
                {
                    return Err(CliError::config(
                        "/compare/methods",
                        format!("{m} cannot be part of a comparison"),
                    ));
                }
                c.methods.sort();
                c.methods.dedup();
                c.methods.clone()
            }
            m => vec![m],
        };
        for m in &methods {
            if m.needs_molecule() && !molecular {
                return Err(CliError::config(
                    "/hamiltonian",
                    format!("method {m} needs a molecular (fcidump or bundled) source"),
                ));
            }
            match m {
                Method::Adapt | Method::DoubleAdapt | Method::Tetris => {
                    self.adapt.get_or_insert_with(AdaptBlock::default);
                }
                Method::Vqe if self.ansatz.is_none() => {
                    return Err(CliError::config(
                        "/ansatz",
                        "method vqe requires an ansatz block",
                    ));
                }
                Method::Forge => {
                    if self.forging.is_none() {
                        return Err(CliError::config(
                            "/forging",
                            "method forge requires a forging block",
                        ));
                    }
                    if self.hamiltonian.mapping != Some(MappingKind::JordanWigner) {
                        return Err(CliError::config(
                            "/hamiltonian/mapping",
                            "forging splits spin halves and needs jordan_wigner",
                        ));
                    }
                }
                _ => {}
            }
            if m.is_experiment() {
                if self.noise.is_none() {
                    return Err(CliError::config(
                        "/noise",
                        format!("method {m} requires a noise block"),
                    ));
                }
                if self.ansatz.is_none() && !molecular {
                    return Err(CliError::config(
                        "/ansatz",
                        format!("method {m} on a Pauli source requires an ansatz block"),
                    ));
                }
                self.zne.get_or_insert_with(ZneConfig::default);
                self.trex.get_or_insert_with(TrexConfig::default);
                self.experiment.get_or_insert_with(ExperimentBlock::default);
            }
        }
        if matches!(self.ansatz, Some(AnsatzSpec::Uccsd)) && !molecular {
            return Err(CliError::config(
                "/ansatz",
                "a uccsd ansatz needs a molecular source",
            ));
        }
        self.check_blocks()?;
        Ok(self)
    }

    fn check_blocks(&self) -> Result<(), CliError> {
        let core = |path: &'static str| {
            move |e: vqe_forge_core::Error| CliError::config(path, e.to_string())
        };
        self.optimizer.validate().map_err(core("/optimizer"))?;
        if let Some(a) = &self.adapt {
            a.with_optimizer(&self.optimizer)
                .validate()
                .map_err(core("/adapt"))?;
        }
        if let Some(n) = &self.noise {
            n.model(1).map_err(core("/noise"))?;
        }
        if let Some(z) = &self.zne {
            z.validate().map_err(core("/zne"))?;
        }
        if let Some(t) = &self.trex {
            t.validate().map_err(core("/trex"))?;
        }
        if let Some(e) = &self.experiment {
            if e.trials == 0 {
                return Err(CliError::config("/experiment/trials", "must be positive"));
            }
        }
        if let Some(r) = &self.reference {
            vqe_forge_core::state::bitstring_to_index(r).map_err(core("/reference"))?;
        }
        Ok(())
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("configuration serializes")
    }

    /// SHA-256 of the compact resolved configuration.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("configuration serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Loaded, CliError> {
        load(text, &Overrides::default())
    }

    #[test]
    fn defaults_resolve() {
        let l = parse(r#"{"hamiltonian": {"bundled": "h2"}, "method": "adapt"}"#).unwrap();
        assert_eq!(
            l.config.hamiltonian.mapping,
            Some(MappingKind::ParityReduced)
        );
        assert!(l.config.adapt.is_some());
        assert!(l.warnings.is_empty());
    }

    #[test]
    fn unknown_key_warns_with_suggestion() {
        let l = parse(r#"{"hamiltonian": {"bundled": "h2"}, "method": "diag", "optimizer": {"learning_rat": 0.1}}"#)
            .unwrap();
        assert_eq!(l.warnings.len(), 1);
        assert!(l.warnings[0].contains("/optimizer/learning_rat"));
        assert!(l.warnings[0].contains("learning_rate"));
    }

    #[test]
    fn source_count_is_checked() {
        let e = parse(r#"{"hamiltonian": {"bundled": "h2", "pauli": "x"}, "method": "diag"}"#)
            .unwrap_err();
        assert!(e.to_string().contains("/hamiltonian"));
        let e = parse(r#"{"hamiltonian": {}, "method": "diag"}"#).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn missing_blocks_are_named() {
        let e = parse(r#"{"hamiltonian": {"bundled": "h2"}, "method": "trex-experiment"}"#)
            .unwrap_err();
        assert!(e.to_string().contains("noise"), "{e}");
        let e = parse(r#"{"hamiltonian": {"bundled": "h2"}, "method": "forge"}"#).unwrap_err();
        assert!(e.to_string().contains("forging"), "{e}");
    }

    #[test]
    fn type_errors_carry_a_pointer() {
        let e = parse(r#"{"hamiltonian": {"bundled": "h2"}, "method": "diag", "optimizer": {"patience": "x"}}"#)
            .unwrap_err();
        assert!(e.to_string().contains("/optimizer/patience"), "{e}");
    }

    #[test]
    fn overrides_replace_the_source() {
        let o = Overrides {
            pauli: Some("h.pauli".into()),
            method: Some(Method::Diag),
            set: vec![("/optimizer/max_iterations".into(), Value::from(7))],
            ..Default::default()
        };
        let l = load(
            r#"{"hamiltonian": {"bundled": "h2", "mapping": "jordan_wigner"}, "method": "vqe"}"#,
            &o,
        );
        // pauli sources take no mapping
        assert!(l.is_err());
        let l = load(r#"{"hamiltonian": {"bundled": "h2"}, "method": "vqe"}"#, &o).unwrap();
        assert_eq!(l.config.method, Method::Diag);
        assert_eq!(l.config.optimizer.max_iterations, 7);
        assert!(l.config.hamiltonian.bundled.is_none());
    }

    #[test]
    fn hash_is_stable() {
        let a = parse(r#"{"hamiltonian": {"bundled": "h2"}, "method": "diag"}"#).unwrap();
        let b = parse(r#"{"method": "diag", "hamiltonian": {"bundled": "h2"}}"#).unwrap();
        assert_eq!(a.config.hash(), b.config.hash());
        assert_eq!(a.config.hash().len(), 64);
    }
}
