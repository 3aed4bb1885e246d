#![no_main]

use elab_cli::parse_manifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = parse_manifest(text) {
        assert!(m.cases.iter().all(|c| !c.name.is_empty()));
    }
});
