//! Executing a resolved configuration and writing its artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use vqe_forge_core::adapt::{run_adapt, run_double_threshold_adapt, run_tetris_adapt, run_uccsd};
use vqe_forge_core::ansatz::{build_ansatz, generate_pool, ExcitationOp};
use vqe_forge_core::bundled;
use vqe_forge_core::circuit::ParamCircuit;
use vqe_forge_core::fermion::{parse_fcidump, qubit_problem, MappingKind, QubitProblem};
use vqe_forge_core::forging::run_forged_vqe;
use vqe_forge_core::mitigation::{mitigation_csv, mitigation_experiment, MitigationRow};
use vqe_forge_core::pauli::PauliSum;
use vqe_forge_core::record::{RunRecord, TraceRow};
use vqe_forge_core::state::{prepare_basis, StateVector};
use vqe_forge_core::vqe::{exact_ground, run_vqe, MAX_EXACT_QUBITS};
use vqe_forge_core::Error;

use crate::config::{AnsatzSpec, Method, RunConfig};
use crate::error::CliError;

/// Environment variable naming the directory relative output paths live in.
pub const OUTPUT_ROOT_ENV: &str = "VQE_FORGE_OUTPUT_ROOT";

/// The Hamiltonian and reference state a run works on.
pub struct Problem {
    pub hamiltonian: PauliSum,
    pub molecular: Option<QubitProblem>,
    pub reference_bits: String,
    pub reference: StateVector,
    /// Exact ground energy when the register is small enough to diagonalize.
    pub exact: Option<f64>,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn input_error(path: &Path) -> impl FnOnce(Error) -> CliError + '_ {
    move |source| CliError::Input {
        path: path.to_path_buf(),
        source,
    }
}

pub fn load_problem(cfg: &RunConfig) -> Result<Problem, CliError> {
    let src = &cfg.hamiltonian;
    let mapping = src.mapping.unwrap_or(MappingKind::ParityReduced);
    let molecular = if let Some(path) = &src.pauli {
        let h = PauliSum::parse(&read(path)?).map_err(input_error(path))?;
        return finish_problem(cfg, h, None);
    } else if let Some(path) = &src.fcidump {
        let ints = parse_fcidump(&read(path)?).map_err(input_error(path))?;
        qubit_problem(&ints, src.active_space.as_ref(), mapping)?
    } else {
        let name = src.bundled.as_deref().unwrap_or_default();
        let inst = bundled::instance(name)
            .map_err(|e| CliError::config("/hamiltonian/bundled", e.to_string()))?;
        inst.problem(mapping)?
    };
    finish_problem(cfg, molecular.hamiltonian.clone(), Some(molecular))
}

fn finish_problem(
    cfg: &RunConfig,
    h: PauliSum,
    molecular: Option<QubitProblem>,
) -> Result<Problem, CliError> {
    let n = h.n_qubits();
    let reference_bits = match (&cfg.reference, &molecular) {
        (Some(r), _) => r.clone(),
        (None, Some(p)) => p.mapping.hartree_fock_bitstring(),
        (None, None) => "0".repeat(n),
    };
    let reference = prepare_basis(n, &reference_bits)
        .map_err(|e| CliError::config("/reference", e.to_string()))?;
    let exact = if n <= MAX_EXACT_QUBITS {
        Some(exact_ground(&h)?.0)
    } else {
        None
    };
    Ok(Problem {
        hamiltonian: h,
        molecular,
        reference_bits,
        reference,
        exact,
    })
}

fn molecule(p: &Problem) -> Result<&QubitProblem, CliError> {
    p.molecular
        .as_ref()
        .ok_or_else(|| CliError::config("/hamiltonian", "this method needs a molecular source"))
}

fn pool(p: &Problem) -> Result<Vec<ExcitationOp>, CliError> {
    let m = molecule(p)?;
    let (nu, nd) = m.mapping.electrons();
    Ok(generate_pool(m.n_spatial, nu, nd, &m.mapping)?)
}

fn ansatz_circuit(cfg: &RunConfig, p: &Problem) -> Result<ParamCircuit, CliError> {
    match cfg.ansatz.as_ref().unwrap_or(&AnsatzSpec::Uccsd) {
        AnsatzSpec::Uccsd => Ok(build_ansatz(p.hamiltonian.n_qubits(), &pool(p)?)?),
        AnsatzSpec::Circuit(spec) => {
            let c = spec
                .build()
                .map_err(|e| CliError::config("/ansatz", e.to_string()))?;
            if c.n_qubits() != p.hamiltonian.n_qubits() {
                return Err(CliError::config(
                    "/ansatz/n_qubits",
                    format!(
                        "ansatz has {} qubits, Hamiltonian {}",
                        c.n_qubits(),
                        p.hamiltonian.n_qubits()
                    ),
                ));
            }
            Ok(c)
        }
    }
}

/// Everything a run produced, before anything is written.
#[derive(Debug)]
pub struct Outcome {
    pub method: Method,
    pub records: Vec<RunRecord>,
    pub exact: Option<f64>,
    pub mitigation: Vec<MitigationRow>,
}

fn diag(p: &Problem, seed: u64) -> Result<RunRecord, CliError> {
    let e = match p.exact {
        Some(e) => e,
        None => exact_ground(&p.hamiltonian)?.0,
    };
    let mut r = RunRecord::new("diag", seed);
    r.rows.push(TraceRow {
        iteration: 0,
        energy: e,
        grad_norm: 0.0,
        elapsed_ms: 0.0,
        stage: 0,
    });
    r.final_energy = e;
    r.converged = true;
    Ok(r)
}

fn single(cfg: &RunConfig, p: &Problem, method: Method) -> Result<RunRecord, CliError> {
    let h = &p.hamiltonian;
    let opt = &cfg.optimizer;
    let adapt = || cfg.adapt.clone().unwrap_or_default().with_optimizer(opt);
    Ok(match method {
        Method::Diag => diag(p, cfg.seed)?,
        Method::Vqe => run_vqe(h, &ansatz_circuit(cfg, p)?, &p.reference, opt, cfg.seed)?,
        Method::Vanilla => run_uccsd(h, &pool(p)?, &p.reference, opt, cfg.seed)?,
        Method::Adapt => run_adapt(h, &pool(p)?, &p.reference, &adapt(), cfg.seed)?,
        Method::DoubleAdapt => {
            run_double_threshold_adapt(h, &pool(p)?, &p.reference, &adapt(), cfg.seed)?
        }
        Method::Tetris => run_tetris_adapt(h, &pool(p)?, &p.reference, &adapt(), cfg.seed)?,
        Method::Forge => {
            let m = molecule(p)?;
            let (nu, nd) = m.mapping.electrons();
            if nu != nd {
                return Err(CliError::config(
                    "/forging",
                    format!("forging needs equal spin populations, found {nu} up and {nd} down"),
                ));
            }
            let fc = cfg
                .forging
                .as_ref()
                .ok_or_else(|| CliError::config("/forging", "missing forging block"))?;
            let ansatz = fc.build(m.n_spatial, nu)?;
            run_forged_vqe(h, &ansatz, opt, cfg.seed)?
        }
        Method::ZneExperiment | Method::TrexExperiment | Method::Mitigation | Method::Compare => {
            unreachable!("handled by execute")
        }
    })
}

fn experiment(cfg: &RunConfig, p: &Problem) -> Result<(RunRecord, Vec<MitigationRow>), CliError> {
    let circuit = ansatz_circuit(cfg, p)?;
    let record = run_vqe(
        &p.hamiltonian,
        &circuit,
        &p.reference,
        &cfg.optimizer,
        cfg.seed,
    )?;
    let prepared = circuit.with_basis_prefix(&p.reference_bits)?;
    let noise = cfg
        .noise
        .as_ref()
        .ok_or_else(|| CliError::config("/noise", "missing noise block"))?
        .model(p.hamiltonian.n_qubits())?;
    let trials = cfg.experiment.clone().unwrap_or_default().trials as u64;
    let seeds: Vec<u64> = (0..trials).map(|t| cfg.seed.wrapping_add(t)).collect();
    let rows = mitigation_experiment(
        &prepared,
        &record.final_parameters,
        &p.hamiltonian,
        &noise,
        &cfg.zne.clone().unwrap_or_default(),
        &cfg.trex.clone().unwrap_or_default(),
        &seeds,
        record.final_energy,
    )?;
    let keep: &[&str] = match cfg.method {
        Method::ZneExperiment => &["raw", "none", "zne"],
        Method::TrexExperiment => &["none", "trex"],
        _ => &["raw", "raw_trex", "none", "zne", "trex", "zne+trex"],
    };
    Ok((
        record,
        rows.into_iter()
            .filter(|r| keep.contains(&r.method.as_str()))
            .collect(),
    ))
}

fn stamp(mut r: RunRecord, cfg: &RunConfig, exact: Option<f64>) -> RunRecord {
    r.config = cfg.to_value();
    r.config_hash = Some(cfg.hash());
    r.reference_energy = exact;
    r
}

/// Runs the configured method(s) without touching the filesystem beyond
/// reading inputs.
pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = load_problem(cfg)?;
    let mut mitigation = Vec::new();
    let records = match cfg.method {
        Method::Compare => {
            let methods = cfg.compare.clone().unwrap_or_default().methods;
            let recs: Vec<RunRecord> = methods
                .par_iter()
                .map(|&m| single(cfg, &p, m))
                .collect::<Result<_, _>>()?;
            recs
        }
        m if m.is_experiment() => {
            let (r, rows) = experiment(cfg, &p)?;
            mitigation = rows;
            vec![r]
        }
        m => vec![single(cfg, &p, m)?],
    };
    let records = records
        .into_iter()
        .map(|r| stamp(r, cfg, p.exact))
        .collect();
    Ok(Outcome {
        method: cfg.method,
        records,
        exact: p.exact,
        mitigation,
    })
}

/// Where a run writes: `--output`/`output`, else `<method>-seed<seed>`,
/// relative paths resolved against `$VQE_FORGE_OUTPUT_ROOT` when set.
pub fn output_dir(cfg: &RunConfig) -> PathBuf {
    let dir = cfg
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}-seed{}", cfg.method, cfg.seed)));
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
        _ => dir,
    }
}

pub const SUMMARY_HEADER: &str =
    "method,final_energy,exact_energy,abs_error,cnots,depth,iterations,wall_ms";

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

pub fn summary_csv(records: &[RunRecord], exact: Option<f64>) -> String {
    let mut rows: Vec<&RunRecord> = records.iter().collect();
    rows.sort_by(|a, b| a.method.cmp(&b.method));
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:?},{},{},{},{},{},{:.3}",
            r.method,
            r.final_energy,
            opt_f64(exact),
            opt_f64(exact.map(|e| (r.final_energy - e).abs())),
            r.cnot_cost,
            r.cnot_depth,
            r.iterations,
            r.wall_ms
        );
    }
    out
}

/// `method,iter,energy,grad_norm,elapsed_ms` over several records.
pub fn combined_trace(records: &[RunRecord], include_timing: bool) -> String {
    let mut out = String::from("method,iter,energy,grad_norm,elapsed_ms\n");
    let mut rows: Vec<&RunRecord> = records.iter().collect();
    rows.sort_by(|a, b| a.method.cmp(&b.method));
    for r in rows {
        for line in r.trace_csv(include_timing).lines().skip(1) {
            let _ = writeln!(out, "{},{line}", r.method);
        }
    }
    out
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf, CliError> {
    fs::write(&path, text).map_err(|source| CliError::Write {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn json(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("records serialize");
    s.push('\n');
    s
}

/// Writes the artifacts of `outcome` into `dir`, returning the files.
pub fn write_outputs(
    cfg: &RunConfig,
    outcome: &Outcome,
    dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    let timing = cfg.trace_timing;
    let mut files = Vec::new();
    if outcome.method == Method::Compare {
        for r in &outcome.records {
            let sub = dir.join(&r.method);
            fs::create_dir_all(&sub).map_err(|source| CliError::Write {
                path: sub.clone(),
                source,
            })?;
            files.push(write(sub.join("record.json"), &json(r))?);
            files.push(write(sub.join("trace.csv"), &r.trace_csv(timing))?);
        }
        files.push(write(dir.join("record.json"), &json(&outcome.records))?);
        files.push(write(
            dir.join("trace.csv"),
            &combined_trace(&outcome.records, timing),
        )?);
        files.push(write(
            dir.join("summary.csv"),
            &summary_csv(&outcome.records, outcome.exact),
        )?);
    } else {
        let r = &outcome.records[0];
        files.push(write(dir.join("record.json"), &json(r))?);
        files.push(write(dir.join("trace.csv"), &r.trace_csv(timing))?);
        if outcome.method.is_experiment() {
            files.push(write(
                dir.join("mitigation.csv"),
                &mitigation_csv(&outcome.mitigation),
            )?);
        }
    }
    Ok(files)
}

/// Human-readable result lines for the terminal.
pub fn report(outcome: &Outcome) -> String {
    let mut out = String::new();
    for r in &outcome.records {
        let _ = write!(out, "{:<13} energy {:.10}", r.method, r.final_energy);
        if let Some(e) = outcome.exact {
            let _ = write!(out, "  |error| {:.3e}", (r.final_energy - e).abs());
        }
        if r.cnot_cost > 0 {
            let _ = write!(out, "  cnots {} depth {}", r.cnot_cost, r.cnot_depth);
        }
        let _ = writeln!(out, "  iterations {}", r.iterations);
    }
    if !outcome.mitigation.is_empty() {
        let mut methods: Vec<&str> = outcome
            .mitigation
            .iter()
            .map(|r| r.method.as_str())
            .collect();
        methods.sort();
        methods.dedup();
        for m in methods {
            let mut errs: Vec<f64> = outcome
                .mitigation
                .iter()
                .filter(|r| r.method == m)
                .map(|r| r.abs_error)
                .collect();
            errs.sort_by(f64::total_cmp);
            let median = errs[errs.len() / 2];
            let _ = writeln!(
                out,
                "{m:<13} median |error| {median:.3e} over {} rows",
                errs.len()
            );
        }
    }
    out
}
