#![no_main]

use libfuzzer_sys::fuzz_target;
use varsel::harness::ScenarioFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(f) = ScenarioFile::from_toml_str(text) {
        assert!(f.spec.validate().is_ok());
    }
});
