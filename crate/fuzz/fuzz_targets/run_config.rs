#![no_main]

use libfuzzer_sys::fuzz_target;
use vqe_forge::{load, Overrides};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(loaded) = load(text, &Overrides::default()) {
        let again = load(&loaded.config.to_value().to_string(), &Overrides::default())
            .expect("resolved config reloads");
        assert_eq!(again.config.hash(), loaded.config.hash());
    }
});
