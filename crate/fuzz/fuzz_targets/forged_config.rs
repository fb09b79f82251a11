#![no_main]

use libfuzzer_sys::fuzz_target;
use vqe_forge_core::forging::ForgedConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ForgedConfig::parse(text) else { return };
    let Some(first) = cfg.bitstrings.first() else { return };
    let n_half = first.chars().count();
    if n_half == 0 || n_half > 8 {
        return;
    }
    let ones = first.chars().filter(|c| *c == '1').count();
    if let Ok(a) = cfg.build(n_half, ones) {
        let norm: f64 = a.schmidt_coeffs.iter().map(|l| l * l).sum();
        assert!((norm - 1.0).abs() < 1e-9);
    }
});
