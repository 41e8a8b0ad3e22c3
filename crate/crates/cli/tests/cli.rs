use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn varsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varsel")).args(args).output().unwrap()
}

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const TINY: &str = r#"
master_seed = 3
methods = ["BSS", "FSS", "LASSO"]
lambda_grid_size = 40
k_range = { min = 1, max = 5 }
bss_time_budget_ms = 20
replications = 2

[[scenarios]]
scenario_id = "tiny-toeplitz0.70-consecutive-tau1.22"
n = 60
p = 15
tau = 1.22
covariance = { structure = "toeplitz", rho = 0.7 }
beta = { s = 4, placement = "consecutive" }
"#;

#[test]
fn run_summarize_and_plots() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("tiny.toml");
    std::fs::write(&config, TINY).unwrap();
    let out = tmp.path().join("out");
    let stdout = ok(&varsel(&["run", "--config", config.to_str().unwrap(), "--workers", "2", "--out", out.to_str().unwrap()]));
    assert!(stdout.contains("tiny-toeplitz0.70-consecutive-tau1.22"));
    let raw = out.join("raw.csv");
    let summary = std::fs::read(out.join("summary.csv")).unwrap();

    let resummary = tmp.path().join("s2.csv");
    ok(&varsel(&["summarize", "--raw", raw.to_str().unwrap(), "--out", resummary.to_str().unwrap()]));
    assert_eq!(std::fs::read(&resummary).unwrap(), summary);

    for fig in ["boxplot", "per-k"] {
        ok(&varsel(&["plots", "--raw", raw.to_str().unwrap(), "--figure", fig]));
        assert!(out.join(format!("plot_{fig}.csv")).exists());
        assert!(out.join(format!("plot_{fig}.missing.csv")).exists());
    }
    let bad = varsel(&["plots", "--raw", raw.to_str().unwrap(), "--figure", "pie"]);
    assert!(!bad.status.success());
}

#[test]
fn certify_writes_both_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("tiny.toml");
    std::fs::write(&config, TINY).unwrap();
    let out = tmp.path().join("cert");
    let stdout = ok(&varsel(&[
        "certify", "--config", config.to_str().unwrap(), "--limits", "5ms,50ms", "--out", out.to_str().unwrap(),
    ]));
    assert_eq!(stdout.lines().count(), 2);
    assert!(out.join("certification.csv").exists());
    assert!(out.join("certification_panels.csv").exists());
    let bad = varsel(&["certify", "--config", config.to_str().unwrap(), "--limits", "soon"]);
    assert!(!bad.status.success());
}

#[test]
fn gen_data_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = repo("configs/scenario-example.toml");
    let (a, b) = (tmp.path().join("a.csv"), tmp.path().join("b.csv"));
    let s1 = ok(&varsel(&["gen-data", "--spec", spec.to_str().unwrap(), "--seed", "9", "--out", a.to_str().unwrap()]));
    ok(&varsel(&["gen-data", "--spec", spec.to_str().unwrap(), "--seed", "9", "--out", b.to_str().unwrap()]));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(s1.contains("true support: {1, 11, 21, 31, 41, 51, 61, 71, 81, 91}"), "{s1}");
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 1001);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 101);
}

#[test]
fn bad_inputs_fail_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.toml");
    std::fs::write(&config, format!("{TINY}\ncolour = \"red\"\n")).unwrap();
    let out = varsel(&["run", "--config", config.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let out = varsel(&["run", "--config", config.to_str().unwrap(), "--preset", "huge"]);
    assert!(!out.status.success());

    std::fs::write(&config, TINY).unwrap();
    let out = varsel(&["run", "--config", config.to_str().unwrap(), "--workers", "0"]);
    assert!(!out.status.success());
}
