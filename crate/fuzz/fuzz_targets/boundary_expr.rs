#![no_main]

use elab_core::boundary::BoundaryExpr;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    for dim in [2, 3] {
        if let Ok(e) = BoundaryExpr::parse(text, dim) {
            let x = if dim == 2 {
                vec![0.6, 0.8]
            } else {
                vec![0.0, 0.6, 0.8]
            };
            let _ = e.value(&x);
            let _ = e.gradient(&x);
            let again = BoundaryExpr::parse(&e.to_string(), dim).expect("display re-parses");
            assert_eq!(again.dim(), dim);
        }
    }
});
