#![no_main]

use elab_core::descriptor::parse_sweep;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(s) = parse_sweep(text) {
        assert!(!s.ns.is_empty() && !s.ratios.is_empty());
        assert!(s.ratios.iter().all(|&r| r > 0.0 && r <= 1.0));
    }
});
