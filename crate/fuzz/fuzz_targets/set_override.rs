#![no_main]
use kpzlab::config::{parse_set, Experiment};
use kpzlab::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_set(text);
        let mut cfg = ExperimentConfig::new(Experiment::Modulus);
        if cfg.apply_set(text).is_ok() {
            let _ = cfg.validate();
        }
    }
});
