#![no_main]
use kpzlab_core::ensemble::parse_rows;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = parse_rows(data);
});
