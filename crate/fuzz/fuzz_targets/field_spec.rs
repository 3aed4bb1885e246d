#![no_main]

use elab_core::descriptor::{field_dim, parse_field};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let dim = field_dim(text).unwrap_or(2);
    if let Ok(field) = parse_field(text, dim, 1) {
        assert!(field.lambda() > 0.0 && field.lambda() <= field.big_lambda());
        let mut x = vec![0.0; field.dim()];
        x[0] = 0.5;
        let _ = field.matrix(&x);
    }
});
