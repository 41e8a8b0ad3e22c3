#![no_main]

use libfuzzer_sys::fuzz_target;
use varsel::harness::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = ExperimentConfig::from_toml_str(text, None) {
        assert!(c.k_min >= 1 && c.k_min <= c.k_max);
        assert!(c.workers >= 1);
        assert!(!c.scenarios.is_empty());
        for s in &c.scenarios {
            assert!(c.k_max <= s.p.min(s.n - 1));
        }
    }
});
