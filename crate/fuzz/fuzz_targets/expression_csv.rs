#![no_main]

use libfuzzer_sys::fuzz_target;
use varsel::datagen::parse_expression_matrix;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = parse_expression_matrix(data) {
        assert_eq!(m.row_ids.len(), m.nrows());
        assert_eq!(m.column_ids.len(), m.ncols());
        assert!(m.values.iter().all(|v| v.is_finite()));
    }
});
