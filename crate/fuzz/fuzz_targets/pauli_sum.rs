#![no_main]

use libfuzzer_sys::fuzz_target;
use vqe_forge_core::pauli::PauliSum;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(h) = PauliSum::parse(text) {
        let back = PauliSum::parse(&h.to_text()).expect("rendered sum parses");
        assert_eq!(back, h);
    }
});
