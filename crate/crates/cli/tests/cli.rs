use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_vqe-forge");

fn vqe_forge(root: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("VQE_FORGE_OUTPUT_ROOT", root)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref())
        .unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

#[test]
fn diag_writes_record_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = vqe_forge(
        dir.path(),
        &["run", "--bundled", "h2", "--method", "diag", "-o", "diag"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rec: Value = serde_json::from_str(&read(dir.path().join("diag/record.json"))).unwrap();
    let e = rec["final_energy"].as_f64().unwrap();
    assert!((e + 1.1373060357534004).abs() < 1e-8, "{e}");
    assert!(rec["config_hash"].as_str().unwrap().len() == 64);
    assert_eq!(rec["config"]["method"], "diag");
    assert!(
        read(dir.path().join("diag/trace.csv")).starts_with("iter,energy,grad_norm,elapsed_ms\n")
    );
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = vqe_forge(
        dir.path(),
        &[
            "run",
            "--bundled",
            "beh2_sub2",
            "--method",
            "trex-experiment",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("noise"), "{}", stderr(&o));

    let o = vqe_forge(
        dir.path(),
        &["run", "--bundled", "nope", "--method", "diag"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope"));

    let bad = dir.path().join("bad.pauli");
    std::fs::write(&bad, "XX 1.0\nXQ 0.5\n").unwrap();
    let o = vqe_forge(
        dir.path(),
        &["run", "--pauli", bad.to_str().unwrap(), "--method", "diag"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let missing = dir.path().join("missing.json");
    let o = vqe_forge(dir.path(), &["validate", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"hamiltonian": {"bundled": "h2"}, "method": "forge", "forging": {"bitstrings": ["11"]}}"#).unwrap();
    let o = vqe_forge(
        dir.path(),
        &["run", cfg.to_str().unwrap(), "--mapping", "jordan-wigner"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("popcount"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_warn_with_suggestion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"hamiltonian": {"bundled": "h2"}, "method": "diag", "optimizer": {"learning_rat": 0.1}}"#).unwrap();
    let o = vqe_forge(dir.path(), &["validate", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let err = stderr(&o);
    assert!(
        err.contains("learning_rat") && err.contains("learning_rate"),
        "{err}"
    );
}

#[test]
fn presets_are_listed_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let o = vqe_forge(dir.path(), &["presets"]);
    assert!(o.status.success());
    let list = String::from_utf8(o.stdout).unwrap();
    for name in [
        "beh2-diag",
        "compare-all",
        "h2-vqe",
        "mitigation-beh2-sub2",
        "forge-beh2-sub2",
        "forge-beh2-sub4",
    ] {
        assert!(list.contains(name), "{name} missing from {list}");
        let o = vqe_forge(dir.path(), &["validate", "--preset", name]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for (preset, extra) in [
        ("h2-vqe", vec![]),
        ("forge-beh2-sub2", vec!["--max-iterations", "40"]),
    ] {
        let mut traces = Vec::new();
        for out in ["a", "b"] {
            let mut args = vec!["run", "--preset", preset, "--seed", "7", "-o", out];
            args.extend(&extra);
            let o = vqe_forge(dir.path(), &args);
            assert!(o.status.success(), "{preset}: {}", stderr(&o));
            traces.push(std::fs::read(dir.path().join(out).join("trace.csv")).unwrap());
        }
        assert_eq!(traces[0], traces[1], "{preset}");
    }
}

#[test]
fn compare_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = vqe_forge(
        dir.path(),
        &[
            "run",
            "--preset",
            "compare-all",
            "--bundled",
            "h2",
            "--max-iterations",
            "200",
            "-o",
            "cmp",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = read(dir.path().join("cmp/summary.csv"));
    let mut lines = summary.lines();
    assert_eq!(
        lines.next().unwrap(),
        "method,final_energy,exact_energy,abs_error,cnots,depth,iterations,wall_ms"
    );
    let methods: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(methods, ["adapt", "double-adapt", "tetris", "vanilla"]);
    for m in &methods {
        assert!(dir.path().join("cmp").join(m).join("trace.csv").exists());
    }
    let records: Value = serde_json::from_str(&read(dir.path().join("cmp/record.json"))).unwrap();
    assert_eq!(records.as_array().unwrap().len(), 4);
}

#[test]
fn mitigation_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = vqe_forge(
        dir.path(),
        &[
            "run",
            "--preset",
            "mitigation-beh2-sub2",
            "--set",
            "/experiment/trials=2",
            "--set",
            "/zne/shots=500",
            "-o",
            "mit",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = read(dir.path().join("mit/mitigation.csv"));
    assert!(csv.starts_with("method,scale_or_mask,seed,estimate,exact,abs_error\n"));
    for m in ["none,", "zne,", "trex,", "zne+trex,"] {
        assert_eq!(csv.lines().filter(|l| l.starts_with(m)).count(), 2, "{m}");
    }
}

#[test]
fn exported_pauli_sum_round_trips_through_run() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("lih.pauli");
    let o = vqe_forge(
        dir.path(),
        &["export", "--bundled", "lih", "-o", file.to_str().unwrap()],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = vqe_forge(
        dir.path(),
        &[
            "run",
            "--pauli",
            file.to_str().unwrap(),
            "--method",
            "diag",
            "-o",
            "p",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rec: Value = serde_json::from_str(&read(dir.path().join("p/record.json"))).unwrap();
    assert!((rec["final_energy"].as_f64().unwrap() + 7.882175990801272).abs() < 1e-8);
}
