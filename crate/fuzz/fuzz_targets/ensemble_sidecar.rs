#![no_main]
use kpzlab_core::ensemble::Sidecar;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(side) = Sidecar::parse(text) {
            let _ = side.assemble(&[(1, 0.0, 0.0), (1, 1.0, 0.5)]);
        }
    }
});
