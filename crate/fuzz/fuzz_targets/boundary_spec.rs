#![no_main]

use elab_core::descriptor::parse_boundary;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    for dim in [2, 3] {
        let _ = parse_boundary(text, dim, 0);
    }
});
