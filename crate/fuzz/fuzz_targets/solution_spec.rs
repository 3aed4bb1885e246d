#![no_main]

use elab_core::descriptor::parse_solution;
use elab_core::CoefficientField;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    for dim in [2, 3] {
        let field = CoefficientField::identity(dim).expect("identity");
        if let Ok(sol) = parse_solution(text, &field) {
            assert_eq!(sol.dim(), dim);
            let mut x = vec![0.0; dim];
            x[1] = 0.5;
            let _ = sol.value(&x);
            let _ = sol.gradient(&x);
        }
    }
});
