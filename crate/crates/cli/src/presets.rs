//! Configurations shipped with the binary.

/// `(name, description, JSON)`.
pub const PRESETS: &[(&str, &str, &str)] = &[
    (
        "beh2-diag",
        "exact ground energy of the 10-qubit BeH2 problem",
        include_str!("../presets/beh2-diag.json"),
    ),
    (
        "compare-all",
        "UCCSD, ADAPT, double-threshold ADAPT and TETRIS on BeH2: CNOT counts, depths and convergence traces",
        include_str!("../presets/compare-all.json"),
    ),
    (
        "h2-vqe",
        "UCCSD VQE on H2",
        include_str!("../presets/h2-vqe.json"),
    ),
    (
        "mitigation-beh2-sub2",
        "ZNE, TREX and both on the noisy 4-qubit BeH2 subsystem over 50 seeds",
        include_str!("../presets/mitigation-beh2-sub2.json"),
    ),
    (
        "forge-beh2-sub2",
        "entanglement-forged VQE on the two-orbital BeH2 subsystem",
        include_str!("../presets/forge-beh2-sub2.json"),
    ),
    (
        "forge-beh2-sub4",
        "entanglement-forged VQE on the four-orbital BeH2 subsystem",
        include_str!("../presets/forge-beh2-sub4.json"),
    ),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.2)
}
