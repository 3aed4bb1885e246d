#![no_main]

use elab_core::{CoefficientField, FieldDescriptor};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(desc) = serde_json::from_slice::<FieldDescriptor>(data) else {
        return;
    };
    if let Ok(field) = CoefficientField::from_descriptor(&desc) {
        let mut x = vec![0.0; field.dim()];
        x[0] = 0.5;
        let _ = field.matrix(&x);
    }
});
