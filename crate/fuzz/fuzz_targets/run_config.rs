#![no_main]

use elab_cli::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(cfg) = serde_json::from_slice::<RunConfig>(data) else {
        return;
    };
    let _ = cfg.resolved_dim();
    let _ = cfg.build_field();
});
