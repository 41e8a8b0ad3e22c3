#![no_main]

use libfuzzer_sys::fuzz_target;
use varsel::harness::record::{raw_csv_string, read_raw_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(records) = read_raw_csv(data) else { return };
    // whatever parses must survive a write/read cycle unchanged in text form
    let text = raw_csv_string(&records).expect("serializable");
    let again = read_raw_csv(text.as_bytes()).expect("own output parses");
    assert_eq!(raw_csv_string(&again).unwrap(), text);
});
