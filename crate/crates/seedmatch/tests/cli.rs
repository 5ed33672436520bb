//! End-to-end checks of the command-line binary: file outputs, JSON and CSV
//! shapes, exit codes, and byte-level determinism under a fixed seed.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use seedmatch::harness::parse_csv;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seedmatch"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn generate(dir: &Path, n: &str, s: &str, delta: &str, seed: &str) {
    let out = run(&[
        "generate", "--n", n, "--a", "5", "--b", "1", "--s", s, "--delta", delta, "--seed",
        seed, "--out", dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn generate_writes_identical_files_for_identical_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let (r1, r2, r3) = (tmp.path().join("r1"), tmp.path().join("r2"), tmp.path().join("r3"));
    generate(&r1, "100", "0.8", "0.9", "42");
    generate(&r2, "100", "0.8", "0.9", "42");
    generate(&r3, "100", "0.8", "0.9", "43");
    for name in ["A.edges", "B.edges", "seeds.csv", "truth.csv"] {
        let f1 = fs::read(r1.join(name)).unwrap();
        let f2 = fs::read(r2.join(name)).unwrap();
        assert_eq!(f1, f2, "{name} differs between identical runs");
    }
    assert_ne!(
        fs::read(r1.join("A.edges")).unwrap(),
        fs::read(r3.join("A.edges")).unwrap(),
        "different seeds should give different graphs"
    );
}

#[test]
fn generate_with_zero_sampling_writes_edgeless_graphs() {
    let tmp = tempfile::tempdir().unwrap();
    generate(tmp.path(), "50", "0", "0.5", "1");
    assert_eq!(fs::read_to_string(tmp.path().join("A.edges")).unwrap(), "");
    assert_eq!(fs::read_to_string(tmp.path().join("B.edges")).unwrap(), "");
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let out = run(&["generate", "--a", "5", "--b", "1", "--s", "0.8", "--delta", "0.9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_trials_is_a_usage_error() {
    let out = run(&[
        "oracle", "--isolated", "--n", "100", "--a", "2", "--b", "1", "--s", "0.5",
        "--u-size", "20", "--trials", "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_parameters_are_runtime_failures() {
    let out = run(&[
        "generate", "--n", "50", "--a", "5", "--b", "1", "--s", "2.0", "--delta", "0.5",
        "--out", "/tmp/unused-seedmatch-out",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
    assert!(out.stdout.is_empty());
}

#[test]
fn match_reports_high_accuracy_in_an_easy_regime() {
    let tmp = tempfile::tempdir().unwrap();
    generate(tmp.path(), "300", "0.8", "0.9", "7");
    let out = run(&[
        "match",
        "--a", tmp.path().join("A.edges").to_str().unwrap(),
        "--b", tmp.path().join("B.edges").to_str().unwrap(),
        "--seeds", tmp.path().join("seeds.csv").to_str().unwrap(),
        "--truth", tmp.path().join("truth.csv").to_str().unwrap(),
        "--method", "hungarian",
    ]);
    let json: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(json["method"], "overlap_hungarian");
    let accuracy = json["accuracy"].as_f64().unwrap();
    assert!(accuracy >= 0.8, "accuracy {accuracy} unexpectedly low");
    assert_eq!(json["permutation"].as_array().unwrap().len(), 300);
}

#[test]
fn match_without_truth_omits_accuracy() {
    let tmp = tempfile::tempdir().unwrap();
    generate(tmp.path(), "60", "0.8", "0.8", "3");
    let out = run(&[
        "match",
        "--a", tmp.path().join("A.edges").to_str().unwrap(),
        "--b", tmp.path().join("B.edges").to_str().unwrap(),
        "--seeds", tmp.path().join("seeds.csv").to_str().unwrap(),
        "--method", "greedy",
    ]);
    let json: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert!(json.get("accuracy").is_none());
}

#[test]
fn lp_method_refuses_blocks_above_the_cap() {
    let tmp = tempfile::tempdir().unwrap();
    generate(tmp.path(), "100", "0.8", "0.5", "9");
    let out = run(&[
        "match",
        "--a", tmp.path().join("A.edges").to_str().unwrap(),
        "--b", tmp.path().join("B.edges").to_str().unwrap(),
        "--seeds", tmp.path().join("seeds.csv").to_str().unwrap(),
        "--method", "lp",
        "--lp-cap", "10",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lp-cap"));
}

#[test]
fn fw_with_zero_iterations_still_produces_a_permutation() {
    let tmp = tempfile::tempdir().unwrap();
    generate(tmp.path(), "60", "0.8", "0.8", "3");
    let out = run(&[
        "match",
        "--a", tmp.path().join("A.edges").to_str().unwrap(),
        "--b", tmp.path().join("B.edges").to_str().unwrap(),
        "--seeds", tmp.path().join("seeds.csv").to_str().unwrap(),
        "--method", "fw",
        "--fw-iters", "0",
    ]);
    let json: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let trace = json["diagnostics"]["fw"]["objective_trace"].as_array().unwrap();
    assert_eq!(trace.len(), 1);
    let perm = json["permutation"].as_array().unwrap();
    let mut seen: Vec<u64> = perm.iter().map(|v| v.as_u64().unwrap()).collect();
    seen.sort_unstable();
    assert_eq!(seen, (0..60).collect::<Vec<u64>>());
}

fn sweep_config(tmp: &Path, body: &str) -> String {
    let path = tmp.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_sweep(config: &str, out: &Path) -> String {
    let output = run(&["sweep", "--config", config, "--out", out.to_str().unwrap()]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    fs::read_to_string(out).unwrap()
}

fn mask_runtime_columns(csv: &str) -> String {
    let mut lines = csv.lines();
    let mut out = String::new();
    out.push_str(lines.next().unwrap());
    out.push('\n');
    for line in lines {
        let mut fields: Vec<&str> = line.split(',').collect();
        fields[4] = "-";
        fields[5] = "-";
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

#[test]
fn sweep_output_is_deterministic_once_runtimes_are_masked() {
    let tmp = tempfile::tempdir().unwrap();
    let config = sweep_config(
        tmp.path(),
        r#"{
            "source": {"synthetic": {"n": 120, "a": 5.0, "b": 1.0, "s": 0.8}},
            "seed_fraction": 0.8,
            "methods": ["overlap_hungarian", "fw_linear"],
            "trials": 2,
            "rng_seed": 11,
            "deltas": [0.7, 0.9]
        }"#,
    );
    let csv1 = run_sweep(&config, &tmp.path().join("run1.csv"));
    let csv2 = run_sweep(&config, &tmp.path().join("run2.csv"));
    assert_eq!(mask_runtime_columns(&csv1), mask_runtime_columns(&csv2));
    let parsed = parse_csv(&csv1).unwrap();
    assert_eq!(parsed.rows.len(), 4);
    assert!(parsed.rows.iter().all(|r| r.trials == 2));
}

#[test]
fn sweep_without_deltas_runs_the_configured_fraction() {
    let tmp = tempfile::tempdir().unwrap();
    let config = sweep_config(
        tmp.path(),
        r#"{
            "source": {"synthetic": {"n": 80, "a": 5.0, "b": 1.0, "s": 0.8}},
            "seed_fraction": 0.75,
            "methods": ["hop2"],
            "trials": 2,
            "rng_seed": 4
        }"#,
    );
    let csv = run_sweep(&config, &tmp.path().join("single.csv"));
    let parsed = parse_csv(&csv).unwrap();
    assert_eq!(parsed.rows.len(), 1);
    assert_eq!(parsed.rows[0].param, 0.75);
}

#[test]
fn oracle_isolated_reports_expectation_and_errors() {
    let out = run(&[
        "oracle", "--isolated", "--n", "200", "--a", "2", "--b", "1", "--s", "0.5",
        "--u-size", "50", "--trials", "60", "--seed", "5",
    ]);
    let json: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    for field in ["mean_isolated", "se_isolated", "expected_isolated", "mean_hard_isolated"] {
        assert!(json[field].as_f64().unwrap().is_finite(), "{field} missing");
    }
    let mean = json["mean_isolated"].as_f64().unwrap();
    let expected = json["expected_isolated"].as_f64().unwrap();
    let se = json["se_isolated"].as_f64().unwrap();
    assert!((mean - expected).abs() <= 5.0 * se.max(0.1));
}

#[test]
fn oracle_score_tails_honors_the_epsilon_grid() {
    let out = run(&[
        "oracle", "--score-tails", "--n", "150", "--a", "5", "--b", "1", "--s", "0.8",
        "--u-size", "20", "--trials", "40", "--seed", "2", "--eps", "0.0", "--eps", "0.6",
    ]);
    let json: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(json["eps"].as_array().unwrap().len(), 2);
    assert_eq!(json["false_pair_freq"][0].as_f64().unwrap(), 1.0);
}

#[test]
fn lp_dump_writes_lp_format_text() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("model.lp");
    let out = run(&[
        "lp-dump", "--n", "20", "--a", "5", "--b", "2", "--s", "1", "--delta", "0.7",
        "--seed", "3", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&path).unwrap();
    for section in ["Minimize", "Subject To", "Bounds", "End"] {
        assert!(text.contains(section), "missing section {section}");
    }
    let stdout = stdout_of(&run(&[
        "lp-dump", "--n", "20", "--a", "5", "--b", "2", "--s", "1", "--delta", "0.7",
        "--seed", "3",
    ]));
    assert_eq!(stdout, text);
}
