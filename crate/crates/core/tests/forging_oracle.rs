mod common;

use common::*;
use rand::seq::SliceRandom;
use vqe_forge_core::bundled;
use vqe_forge_core::circuit::apply_circuit;
use vqe_forge_core::error::BitstringRule;
use vqe_forge_core::fermion::MappingKind;
use vqe_forge_core::forging::*;
use vqe_forge_core::optim::OptimizerConfig;
use vqe_forge_core::state::prepare_basis;
use vqe_forge_core::vqe::exact_ground;
use vqe_forge_core::Error;

#[test]
fn forged_expectation_matches_full_statevector() {
    for seed in 0..100u64 {
        let (a, h) = random_forged_instance(seed);
        let split = split_hamiltonian(&h).unwrap();
        let forged = forged_expectation(&a, &split).unwrap();
        let psi = schmidt_state(&a);
        let full = (psi.adjoint() * dense(&h) * &psi)[(0, 0)].re;
        assert!(
            (forged - full).abs() < 1e-10,
            "seed {seed}: forged {forged} vs full {full}"
        );
        let assembled = to_vector(&a.assemble().unwrap());
        assert!(
            (assembled - &psi).norm() < 1e-12,
            "seed {seed}: assembled state differs"
        );
    }
}

#[test]
fn split_reassembles_to_the_original() {
    for seed in 0..20u64 {
        let mut r = rng(seed);
        let h = random_hermitian(&mut r, 6, 20).normalized();
        let back = split_hamiltonian(&h)
            .unwrap()
            .reassemble()
            .unwrap()
            .normalized();
        assert!((dense(&h) - dense(&back)).norm() < 1e-12);
    }
    let odd = random_hermitian(&mut rng(0), 3, 4);
    assert!(split_hamiltonian(&odd).is_err());
}

#[test]
fn invariant_under_joint_permutation() {
    for seed in 0..30u64 {
        let (a, h) = random_forged_instance(seed);
        let split = split_hamiltonian(&h).unwrap();
        let e = forged_expectation(&a, &split).unwrap();
        let mut order: Vec<usize> = (0..a.n_schmidt()).collect();
        order.shuffle(&mut rng(seed + 1000));
        let mut b = a.clone();
        b.bitstrings = order.iter().map(|&i| a.bitstrings[i].clone()).collect();
        b.schmidt_coeffs = order.iter().map(|&i| a.schmidt_coeffs[i]).collect();
        let p = forged_expectation(&b, &split).unwrap();
        assert!((e - p).abs() < 1e-12, "seed {seed}: {e} vs {p}");
    }
}

#[test]
fn single_bitstring_is_a_product_state() {
    let (mut a, h) = random_forged_instance(5);
    a.bitstrings.truncate(1);
    a.schmidt_coeffs = vec![1.0];
    let split = split_hamiltonian(&h).unwrap();
    let basis = prepare_basis(a.n_half, &a.bitstrings[0]).unwrap();
    let u = to_vector(&apply_circuit(&a.up, &a.theta_up, &basis).unwrap());
    let v = to_vector(&apply_circuit(&a.down, &a.theta_down, &basis).unwrap());
    let psi = v.kronecker(&u);
    let want = (psi.adjoint() * dense(&h) * &psi)[(0, 0)].re;
    assert!((forged_expectation(&a, &split).unwrap() - want).abs() < 1e-10);
}

#[test]
fn bitstring_rules_are_named() {
    let rule = |b: &str| match check_bitstring(b, 3, 1) {
        Err(Error::Bitstring { rule, .. }) => Some(rule),
        _ => None,
    };
    assert_eq!(rule("100"), None);
    assert_eq!(rule("10"), Some(BitstringRule::Length));
    assert_eq!(rule("110"), Some(BitstringRule::Popcount));
    assert_eq!(rule("1x0"), Some(BitstringRule::Alphabet));
    let cfg = ForgedConfig::parse(r#"{"bitstrings": ["100", "100"]}"#).unwrap();
    assert!(matches!(
        cfg.build(3, 1),
        Err(Error::Bitstring {
            rule: BitstringRule::Distinct,
            ..
        })
    ));
    let msg = check_bitstring("110", 3, 1).unwrap_err().to_string();
    assert!(msg.contains("popcount"), "{msg}");
}

#[test]
fn forged_run_keeps_lambda_normalized_and_is_variational() {
    let p = bundled::instance("beh2_sub2")
        .unwrap()
        .problem(MappingKind::JordanWigner)
        .unwrap();
    let exact = exact_ground(&p.hamiltonian).unwrap().0;
    let cfg = ForgedConfig::parse(r#"{"bitstrings": ["10", "01"]}"#).unwrap();
    let a = cfg.build(2, 1).unwrap();
    let opt = OptimizerConfig {
        max_iterations: 300,
        ..Default::default()
    };
    let rec = run_forged_vqe(&p.hamiltonian, &a, &opt, 0).unwrap();
    let k = a.n_schmidt();
    let norm: f64 = rec.final_parameters[..k].iter().map(|l| l * l).sum();
    assert!((norm - 1.0).abs() < 1e-10, "Σλ² = {norm}");
    assert!(rec.final_energy >= exact - 1e-10);
    assert!(rec.final_energy < rec.rows[0].energy);
    let direct = forged_expectation(
        &a.with_parameters(&rec.final_parameters).unwrap(),
        &split_hamiltonian(&p.hamiltonian).unwrap(),
    )
    .unwrap();
    assert!((direct - rec.final_energy).abs() < 1e-12);
}
