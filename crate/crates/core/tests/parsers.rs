//! Parser robustness: the fuzz target properties as proptests, plus a replay
//! of the checked-in fuzz corpus.

use std::path::{Path, PathBuf};

use proptest::prelude::*;
use varsel::datagen::parse_expression_matrix;
use varsel::harness::record::{raw_csv_string, read_raw_csv};
use varsel::harness::{ExperimentConfig, ScenarioFile};

fn check_expression(data: &[u8]) -> bool {
    match parse_expression_matrix(data) {
        Ok(m) => {
            assert_eq!(m.row_ids.len(), m.nrows());
            assert_eq!(m.column_ids.len(), m.ncols());
            assert!(m.values.iter().all(|v| v.is_finite()));
            true
        }
        Err(_) => false,
    }
}

fn check_config(data: &[u8]) -> bool {
    let Ok(text) = std::str::from_utf8(data) else { return false };
    match ExperimentConfig::from_toml_str(text, None) {
        Ok(c) => {
            assert!(c.k_min >= 1 && c.k_min <= c.k_max);
            assert!(c.workers >= 1);
            assert!(!c.scenarios.is_empty());
            for s in &c.scenarios {
                assert!(c.k_max <= s.p.min(s.n - 1));
            }
            true
        }
        Err(_) => false,
    }
}

fn check_scenario(data: &[u8]) -> bool {
    let Ok(text) = std::str::from_utf8(data) else { return false };
    match ScenarioFile::from_toml_str(text) {
        Ok(f) => {
            assert!(f.spec.validate().is_ok());
            true
        }
        Err(_) => false,
    }
}

fn check_raw(data: &[u8]) -> bool {
    let Ok(records) = read_raw_csv(data) else { return false };
    let text = raw_csv_string(&records).unwrap();
    let again = read_raw_csv(text.as_bytes()).expect("own output parses");
    assert_eq!(raw_csv_string(&again).unwrap(), text);
    true
}

fn corpus(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "empty corpus {}", dir.display());
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn replay(target: &str, check: fn(&[u8]) -> bool, rejected: &[&str]) {
    for (name, data) in corpus(target) {
        let accepted = check(&data);
        assert_eq!(accepted, !rejected.contains(&name.as_str()), "{target}/{name}");
        // truncations must never panic
        for cut in (0..data.len()).step_by(7) {
            check(&data[..cut]);
        }
    }
}

#[test]
fn expression_corpus() {
    replay("expression_csv", check_expression, &["bad_number.csv", "short_row.csv", "small.csv"]);
}

#[test]
fn config_corpus() {
    replay("config_toml", check_config, &["unknown_key.toml"]);
}

#[test]
fn scenario_corpus() {
    replay("scenario_file", check_scenario, &[]);
}

#[test]
fn raw_csv_corpus() {
    replay("raw_csv", check_raw, &[]);
}

fn csv_like() -> impl Strategy<Value = String> {
    proptest::collection::vec(
        prop_oneof![
            Just(",".to_string()),
            Just("\n".to_string()),
            Just("\"".to_string()),
            "[a-z]{1,4}",
            "-?[0-9]{1,3}(\\.[0-9]{1,3})?(e-?[0-9])?",
            Just("NaN".to_string()),
            Just("inf".to_string()),
        ],
        0..60,
    )
    .prop_map(|v| v.concat())
}

fn toml_like() -> impl Strategy<Value = String> {
    let line = prop_oneof![
        Just("master_seed = 7".to_string()),
        Just("preset = \"desk\"".to_string()),
        Just("preset = \"custom\"".to_string()),
        Just("workers = 0".to_string()),
        Just("k_range = { min = 1, max = 15 }".to_string()),
        Just("k_range = { min = 5, max = 2 }".to_string()),
        Just("methods = [\"bss\", \"lasso\"]".to_string()),
        Just("[[scenarios]]".to_string()),
        Just("scenario_id = \"a\"".to_string()),
        Just("design = \"synthetic\"".to_string()),
        Just("n = 40".to_string()),
        Just("n = 1".to_string()),
        Just("p = 20".to_string()),
        Just("tau = 1.22".to_string()),
        Just("tau = -1.0".to_string()),
        Just("replications = 2".to_string()),
        Just("covariance = { structure = \"toeplitz\", rho = 0.7 }".to_string()),
        Just("covariance = { structure = \"block\", rho = 0.7, block_size = 3 }".to_string()),
        Just("beta = { s = 4, placement = \"consecutive\", value = 1.0 }".to_string()),
        "[a-z_]{1,8} = [0-9]{1,3}",
    ];
    proptest::collection::vec(line, 0..25).prop_map(|v| v.join("\n"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn expression_parser_never_panics(text in csv_like()) {
        check_expression(text.as_bytes());
    }

    #[test]
    fn expression_parser_handles_bytes(data in proptest::collection::vec(any::<u8>(), 0..200)) {
        check_expression(&data);
    }

    #[test]
    fn config_parser_never_panics(text in toml_like()) {
        check_config(text.as_bytes());
    }

    #[test]
    fn scenario_parser_never_panics(text in toml_like()) {
        check_scenario(text.as_bytes());
    }

    #[test]
    fn raw_reader_never_panics(text in csv_like()) {
        check_raw(text.as_bytes());
    }

    #[test]
    fn raw_reader_survives_mutated_rows(cut in 0usize..400, byte in any::<u8>()) {
        let seed = std::fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/raw_csv/run_head.csv")).unwrap();
        let mut data = seed.clone();
        let at = cut % data.len();
        data[at] = byte;
        check_raw(&data);
    }
}
