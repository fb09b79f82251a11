#![no_main]

use libfuzzer_sys::fuzz_target;
use vqe_forge_core::fermion::{parse_fcidump, render_fcidump};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ints) = parse_fcidump(text) {
        let back = parse_fcidump(&render_fcidump(&ints)).expect("rendered dump parses");
        assert_eq!(back, ints);
    }
});
