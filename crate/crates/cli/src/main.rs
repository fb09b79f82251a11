use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use vqe_forge::presets::{preset, PRESETS};
use vqe_forge::run::{execute, output_dir, report, write_outputs, OUTPUT_ROOT_ENV};
use vqe_forge::{load, CliError, Loaded, Method, Overrides};
use vqe_forge_core::bundled;
use vqe_forge_core::fermion::{render_fcidump, MappingKind};

#[derive(Parser)]
#[command(name = "vqe-forge", version, about = "Statevector VQE experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write record.json, trace.csv and friends.
    Run(RunArgs),
    /// Check a configuration and print it with defaults filled in.
    Validate(RunArgs),
    /// List the shipped presets, or print one.
    Presets { name: Option<String> },
    /// Write a bundled instance as a Pauli sum or FCIDUMP.
    Export(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mapping {
    JordanWigner,
    ParityReduced,
}

impl From<Mapping> for MappingKind {
    fn from(m: Mapping) -> Self {
        match m {
            Mapping::JordanWigner => MappingKind::JordanWigner,
            Mapping::ParityReduced => MappingKind::ParityReduced,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file.
    config: Option<PathBuf>,
    /// Start from a shipped preset instead of a file.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; relative paths go under $VQE_FORGE_OUTPUT_ROOT.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    pauli: Option<PathBuf>,
    #[arg(long)]
    fcidump: Option<PathBuf>,
    #[arg(long)]
    bundled: Option<String>,
    #[arg(long, value_enum)]
    mapping: Option<Mapping>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Keep wall-clock times in trace.csv.
    #[arg(long)]
    timing: bool,
    /// Override any key: `--set /optimizer/learning_rate=0.02`.
    #[arg(long = "set", value_name = "POINTER=JSON")]
    set: Vec<String>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    bundled: String,
    #[arg(long, value_enum, default_value = "parity-reduced")]
    mapping: Mapping,
    /// Write the raw FCIDUMP instead of the mapped Pauli sum.
    #[arg(long)]
    fcidump: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn overrides(a: &RunArgs) -> Result<Overrides, CliError> {
    let method = a
        .method
        .as_deref()
        .map(|m| {
            m.parse::<Method>()
                .map_err(|e| CliError::config("/method", e))
        })
        .transpose()?;
    let set = a
        .set
        .iter()
        .map(|s| {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| CliError::config(s.as_str(), "expected POINTER=VALUE"))?;
            let v = serde_json::from_str(v).unwrap_or_else(|_| Value::from(v));
            Ok((k.to_string(), v))
        })
        .collect::<Result<_, CliError>>()?;
    Ok(Overrides {
        method,
        seed: a.seed,
        output: a.output.clone(),
        pauli: a.pauli.clone(),
        fcidump: a.fcidump.clone(),
        bundled: a.bundled.clone(),
        mapping: a.mapping.map(Into::into),
        max_iterations: a.max_iterations,
        trace_timing: a.timing,
        set,
    })
}

fn load_args(a: &RunArgs) -> Result<Loaded, CliError> {
    let text = match (&a.config, &a.preset) {
        (Some(path), _) => std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.clone(),
            source,
        })?,
        (None, Some(name)) => preset(name)
            .ok_or_else(|| CliError::config("", format!("unknown preset {name:?}")))?
            .to_string(),
        (None, None) => "{}".to_string(),
    };
    let loaded = load(&text, &overrides(a)?)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(loaded)
}

fn run(a: &RunArgs) -> Result<(), CliError> {
    let cfg = load_args(a)?.config;
    let outcome = execute(&cfg)?;
    print!("{}", report(&outcome));
    let dir = output_dir(&cfg);
    for f in write_outputs(&cfg, &outcome, &dir)? {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn validate(a: &RunArgs) -> Result<(), CliError> {
    let cfg = load_args(a)?.config;
    println!("OK");
    println!(
        "{}",
        serde_json::to_string_pretty(&cfg.to_value()).expect("configuration serializes")
    );
    println!("output directory: {}", output_dir(&cfg).display());
    Ok(())
}

fn export(a: &ExportArgs) -> Result<(), CliError> {
    let text = if a.fcidump {
        render_fcidump(&bundled::integrals(&a.bundled)?)
    } else {
        bundled::instance(&a.bundled)?
            .problem(a.mapping.into())?
            .hamiltonian
            .to_text()
    };
    match &a.output {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Write {
            path: p.clone(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn presets(name: Option<&str>) -> Result<(), CliError> {
    match name {
        Some(n) => {
            print!(
                "{}",
                preset(n).ok_or_else(|| CliError::config("", format!("unknown preset {n:?}")))?
            );
        }
        None => {
            for (n, d, _) in PRESETS {
                println!("{n:<22} {d}");
            }
            println!("(relative output paths are resolved under ${OUTPUT_ROOT_ENV} when set)");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Validate(a) => validate(a),
        Command::Presets { name } => presets(name.as_deref()),
        Command::Export(a) => export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
