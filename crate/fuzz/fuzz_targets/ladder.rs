#![no_main]

use elab_core::descriptor::parse_ladder;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(radii) = parse_ladder(text) {
        assert!(radii.windows(2).all(|w| w[0] < w[1]));
        assert!(radii.iter().all(|&r| r > 0.0 && r <= 1.0));
    }
});
