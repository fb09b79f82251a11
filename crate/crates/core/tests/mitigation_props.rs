mod common;

use common::*;
use rand::Rng;
use vqe_forge_core::adapt::run_uccsd;
use vqe_forge_core::ansatz::{build_ansatz, generate_pool};
use vqe_forge_core::bundled;
use vqe_forge_core::circuit::{apply_circuit, energy, ParamCircuit};
use vqe_forge_core::fermion::MappingKind;
use vqe_forge_core::mitigation::*;
use vqe_forge_core::optim::OptimizerConfig;
use vqe_forge_core::pauli::PauliSum;
use vqe_forge_core::state::{prepare_basis, StateVector};
use vqe_forge_core::Error;

const SHOTS: usize = 10_000;

/// Optimized UCCSD circuit for the two-orbital BeH2 subsystem (JW, 4 qubits),
/// with the reference folded in as X gates.
fn subsystem() -> (ParamCircuit, Vec<f64>, PauliSum) {
    let p = bundled::instance("beh2_sub2")
        .unwrap()
        .problem(MappingKind::JordanWigner)
        .unwrap();
    let (nu, nd) = p.mapping.electrons();
    let pool = generate_pool(p.n_spatial, nu, nd, &p.mapping).unwrap();
    let bits = p.mapping.hartree_fock_bitstring();
    let n = p.hamiltonian.n_qubits();
    let reference = prepare_basis(n, &bits).unwrap();
    let opt = OptimizerConfig {
        max_iterations: 2000,
        ..Default::default()
    };
    let rec = run_uccsd(&p.hamiltonian, &pool, &reference, &opt, 0).unwrap();
    let circ = build_ansatz(n, &pool)
        .unwrap()
        .with_basis_prefix(&bits)
        .unwrap();
    (circ, rec.final_parameters, p.hamiltonian)
}

fn ideal_energy(c: &ParamCircuit, p: &[f64], h: &PauliSum) -> f64 {
    energy(c, p, h, &StateVector::zero(c.n_qubits())).unwrap()
}

#[test]
fn noiseless_estimate_is_unbiased() {
    for seed in 0..10u64 {
        let mut r = rng(seed);
        let n = r.random_range(2..=5);
        let (c, p) = random_circuit(&mut r, n, 12);
        let h = random_hermitian(&mut r, n, 8);
        let est = noisy_estimate(&c, &p, &h, &NoiseModel::ideal(n), SHOTS, seed).unwrap();
        let exact = ideal_energy(&c, &p, &h);
        assert!(
            (est.value - exact).abs() <= 5.0 * est.std_error + 1e-12,
            "seed {seed}: {} vs {exact} ± {}",
            est.value,
            est.std_error
        );
    }
}

#[test]
fn full_depolarizing_gives_maximally_mixed_energy() {
    let mut r = rng(3);
    let n = 4;
    let (mut c, p) = random_circuit(&mut r, n, 10);
    c.cnot(0, 1).unwrap();
    c.cnot(2, 3).unwrap();
    let h = random_hermitian(&mut r, n, 10);
    let noise = NoiseModel::uniform(n, 15.0 / 16.0, 0.0, 0.0).unwrap();
    let est = noisy_estimate(&c, &p, &h, &noise, SHOTS, 11).unwrap();
    let mixed = dense(&h).trace().re / (1 << n) as f64;
    assert!(
        (est.value - mixed).abs() <= 5.0 * est.std_error,
        "{} vs {mixed}",
        est.value
    );
}

#[test]
fn error_grows_with_gate_noise() {
    let (c, p, h) = subsystem();
    let exact = ideal_energy(&c, &p, &h);
    let mut last = 0.0;
    for p2 in [0.0, 0.002, 0.01, 0.03] {
        let noise = NoiseModel::uniform(h.n_qubits(), p2, 0.0, 0.0).unwrap();
        let mean: f64 = (0..20u64)
            .map(|s| noisy_energy(&c, &p, &h, &noise, SHOTS, s).unwrap() - exact)
            .sum::<f64>()
            / 20.0;
        assert!(mean >= last, "p2 {p2}: mean error {mean} below {last}");
        last = mean;
    }
}

#[test]
fn folding_preserves_the_unitary() {
    for seed in 0..50u64 {
        let mut r = rng(seed);
        let n = r.random_range(1..=6);
        let (c, p) = random_circuit(&mut r, n, 15);
        let s = random_state(&mut r, n);
        let want = apply_circuit(&c, &p, &s).unwrap();
        for scale in [3, 5] {
            let folded = fold_circuit(&c, scale).unwrap();
            assert_eq!(folded.gates().len(), scale * c.gates().len());
            assert_eq!(noise_sites(&folded).len(), scale * noise_sites(&c).len());
            let got = apply_circuit(&folded, &p, &s).unwrap();
            assert!(
                (to_vector(&got) - to_vector(&want)).norm() < 1e-10,
                "seed {seed} scale {scale}"
            );
        }
    }
    assert!(fold_circuit(&ParamCircuit::new(1), 2).is_err());
}

#[test]
fn extrapolators_are_exact_on_matching_data() {
    let cfg = |e| ZneConfig {
        extrapolator: e,
        ..Default::default()
    };
    let affine: Vec<(f64, f64)> = [1.0, 3.0, 5.0]
        .iter()
        .map(|&s| (s, -1.25 + 0.07 * s))
        .collect();
    let v = zne_extrapolate(&affine, &cfg(Extrapolator::Linear))
        .unwrap()
        .value;
    assert!((v + 1.25).abs() < 1e-12);
    for degree in 1..=4usize {
        let coeffs: Vec<f64> = (0..=degree).map(|k| 0.3 - 0.11 * k as f64).collect();
        let pts: Vec<(f64, f64)> = (0..=degree)
            .map(|i| {
                let s = (2 * i + 1) as f64;
                (
                    s,
                    coeffs
                        .iter()
                        .enumerate()
                        .map(|(k, c)| c * s.powi(k as i32))
                        .sum(),
                )
            })
            .collect();
        let v = zne_extrapolate(&pts, &cfg(Extrapolator::Richardson))
            .unwrap()
            .value;
        assert!((v - coeffs[0]).abs() < 1e-10, "degree {degree}: {v}");
    }
    let exp: Vec<(f64, f64)> = [1.0f64, 3.0, 5.0, 7.0]
        .iter()
        .map(|&s| (s, -2.0 + 0.5 * (-0.3 * s).exp()))
        .collect();
    let out = zne_extrapolate(&exp, &cfg(Extrapolator::Exponential)).unwrap();
    assert!(out.diagnostic.is_none());
    assert!((out.value + 1.5).abs() < 1e-6, "{}", out.value);
}

#[test]
fn twirl_leaves_ideal_distribution_invariant() {
    for seed in 0..5u64 {
        let mut r = rng(seed);
        let n = r.random_range(1..=4);
        let s = random_state(&mut r, n);
        let probs = s.probabilities();
        for mask in 0..1usize << n {
            let mut t = s.clone();
            t.apply_x_mask(mask);
            let flipped = t.probabilities();
            for k in 0..1usize << n {
                assert!((flipped[k ^ mask] - probs[k]).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn symmetrized_confusion_matrix() {
    let (p01, p10) = (0.08, 0.01);
    // Columns: prepared 0/1; rows: read 0/1.
    let m = [[1.0 - p01, p10], [p01, 1.0 - p10]];
    // Mask bit 1 flips before and after readout: X M X.
    let flipped = [[m[1][1], m[1][0]], [m[0][1], m[0][0]]];
    let avg: Vec<Vec<f64>> = (0..2)
        .map(|i| (0..2).map(|j| (m[i][j] + flipped[i][j]) / 2.0).collect())
        .collect();
    assert!((avg[0][1] - avg[1][0]).abs() < 1e-15);
    assert!((avg[0][0] - (1.0 - (p01 + p10) / 2.0)).abs() < 1e-15);
    assert!((avg[1][1] - avg[0][0]).abs() < 1e-15);

    let h = PauliSum::from_labels([("Z", 1.0)]).unwrap();
    let shots = 100_000;
    let noise = NoiseModel::uniform(1, 0.0, p01, p10).unwrap();
    let cal = trex_calibrate(&h, &noise, shots, 5).unwrap();
    let f = cal.attenuation_of(1, 1).unwrap();
    let want = avg[0][0] - avg[1][0];
    let sigma = ((1.0 - want * want) / shots as f64).sqrt();
    assert!((f - want).abs() < 5.0 * sigma, "{f} vs {want}");
}

#[test]
fn calibration_attenuations_follow_readout_error() {
    let p = 0.05;
    let h =
        PauliSum::from_labels([("ZII", 1.0), ("ZZI", 0.5), ("IZZ", 0.2), ("XXI", 0.1)]).unwrap();
    let shots = 50_000;
    let noise = NoiseModel::uniform(3, 0.0, p, p).unwrap();
    let cal = trex_calibrate(&h, &noise, shots, 9).unwrap();
    for (mask, want) in [
        (0b001u64, 1.0 - 2.0 * p),
        (0b011, (1.0 - 2.0 * p).powi(2)),
        (0b110, (1.0 - 2.0 * p).powi(2)),
    ] {
        let f = cal.attenuation_of(mask, 3).unwrap();
        let sigma = ((1.0 - want * want) / shots as f64).sqrt();
        assert!(
            (f - want).abs() < 5.0 * sigma,
            "mask {mask:b}: {f} vs {want}"
        );
    }
    let ideal = trex_calibrate(&h, &NoiseModel::ideal(3), 1000, 1).unwrap();
    assert!(ideal.attenuation.values().all(|&f| f == 1.0));
    assert!(matches!(
        cal.attenuation_of(0b100, 3),
        Err(Error::MissingCalibration(_))
    ));
}

#[test]
fn calibration_rejects_unrecoverable_supports() {
    let h = PauliSum::from_labels([("ZZ", 1.0)]).unwrap();
    let noise = NoiseModel::uniform(2, 0.0, 0.45, 0.45).unwrap();
    let err = trex_calibrate(&h, &noise, 20_000, 0).unwrap_err();
    assert!(matches!(err, Error::Unrecoverable { .. }), "{err}");
}

#[test]
fn trex_removes_readout_bias() {
    let (c, p, h) = subsystem();
    let exact = ideal_energy(&c, &p, &h);
    let noise = NoiseModel::uniform(h.n_qubits(), 0.0, 0.08, 0.01).unwrap();
    let cal = trex_calibrate(&h, &noise, 50_000, 77).unwrap();
    let plain = noisy_estimate(&c, &p, &h, &noise, SHOTS, 1).unwrap();
    let twirled = trex_estimate(&c, &p, &h, &noise, &cal, SHOTS, 1).unwrap();
    assert!((plain.value - exact).abs() > 5.0 * plain.std_error);
    // Calibration noise adds a few percent relative uncertainty on top.
    assert!(
        (twirled.value - exact).abs() < 5.0 * twirled.std_error + 0.01,
        "{} vs {exact}",
        twirled.value
    );
}

#[test]
fn estimators_are_deterministic_in_seed() {
    let (c, p, h) = subsystem();
    let noise = NoiseModel::uniform(h.n_qubits(), 0.004, 0.08, 0.01).unwrap();
    let a = noisy_energy(&c, &p, &h, &noise, 2000, 42).unwrap();
    let b = noisy_energy(&c, &p, &h, &noise, 2000, 42).unwrap();
    let other = noisy_energy(&c, &p, &h, &noise, 2000, 43).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
    assert_ne!(a.to_bits(), other.to_bits());
    let zne = ZneConfig {
        shots: 2000,
        ..Default::default()
    };
    let trex = TrexConfig {
        calibration_shots: 2000,
        ..Default::default()
    };
    let run = |seeds: &[u64]| {
        mitigation_experiment(&c, &p, &h, &noise, &zne, &trex, seeds, -1.0).unwrap()
    };
    let first = run(&[3, 4]);
    assert_eq!(mitigation_csv(&first), mitigation_csv(&run(&[3, 4])));
    let single = run(&[4]);
    assert_eq!(
        mitigation_csv(&first[first.len() / 2..])
            .lines()
            .skip(1)
            .collect::<Vec<_>>(),
        mitigation_csv(&single).lines().skip(1).collect::<Vec<_>>()
    );
}

#[test]
fn csv_header_and_methods() {
    let (c, p, h) = subsystem();
    let noise = NoiseModel::uniform(h.n_qubits(), 0.004, 0.02, 0.01).unwrap();
    let zne = ZneConfig {
        shots: 500,
        ..Default::default()
    };
    let trex = TrexConfig {
        calibration_shots: 500,
        ..Default::default()
    };
    let rows = mitigation_trial(&c, &p, &h, &noise, &zne, &trex, 0, -1.0).unwrap();
    let csv = mitigation_csv(&rows);
    assert!(csv.starts_with("method,scale_or_mask,seed,estimate,exact,abs_error\n"));
    let methods: Vec<&str> = rows.iter().map(|r| r.method.as_str()).collect();
    for m in ["raw", "raw_trex", "none", "zne", "trex", "zne+trex"] {
        assert!(methods.contains(&m), "{m}");
    }
    assert!(rows
        .iter()
        .all(|r| (r.abs_error - (r.estimate - r.exact).abs()).abs() < 1e-15));
}
