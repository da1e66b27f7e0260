//! End-to-end tests of the binary: exit codes, report shapes, golden
//! fixtures, and the byte-identical determinism contract.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fqlab"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn run(args: &[&str]) -> Output {
    run_in(&fixtures_dir(), args)
}

fn stdout_of(out: &Output) -> &str {
    std::str::from_utf8(&out.stdout).expect("utf8 stdout")
}

#[test]
fn bias_report_value_and_exit() {
    let out = run(&["bias", "--q", "2", "--n", "2", "--poly", "x1*x2"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout_of(&out)).unwrap();
    assert_eq!(v["result"]["bias"]["value"], 0.5);
    assert_eq!(v["result"]["bias"]["method"], "exact");
    assert_eq!(v["manifest"]["command"], "bias");
}

#[test]
fn usage_errors_exit_one() {
    let out = run(&["bias", "--q", "2", "--n", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["definitely-not-a-command"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["bias", "--q", "2", "--n", "2", "--poly", "x1 + + x2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_decomp_exit_codes() {
    let out = run(&[
        "verify-decomp",
        "--q",
        "2",
        "--n",
        "3",
        "--poly",
        "x1*x2*x3 + x1",
        "--decomp",
        "dec_valid.json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout_of(&out));
    let v: serde_json::Value = serde_json::from_str(stdout_of(&out)).unwrap();
    assert_eq!(v["result"]["valid"], true);

    let out = run(&[
        "verify-decomp",
        "--q",
        "2",
        "--n",
        "2",
        "--poly",
        "x1*x2",
        "--decomp",
        "dec_budget_violation.json",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(stdout_of(&out)).unwrap();
    assert_eq!(v["result"]["valid"], false);
    assert!(v["result"]["reason"]
        .as_str()
        .unwrap()
        .contains("degree budget"));
}

#[test]
fn nc_degree_exit_codes() {
    let base = [
        "nc-degree",
        "--file",
        "nc_depth1.txt",
        "--q",
        "2",
        "--n",
        "1",
    ];
    let mut low = base.to_vec();
    low.extend(["--d", "1"]);
    let out = run(&low);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(stdout_of(&out)).unwrap();
    assert_eq!(v["result"]["holds"], false);
    assert!(v["result"]["witness"].is_object());

    let mut high = base.to_vec();
    high.extend(["--d", "2"]);
    let out = run(&high);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn exhaustive_none_is_negative() {
    let out = run(&[
        "constant-subspace",
        "--q",
        "2",
        "--n",
        "2",
        "--poly",
        "x1",
        "--mode",
        "exhaustive",
        "--target-dim",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(stdout_of(&out)).unwrap();
    assert_eq!(v["result"]["found"], false);
}

#[test]
fn decompose_budget_exhaustion_is_infeasible_not_false() {
    // zero time budget forces the not-found path on a nontrivial input
    let out = run(&[
        "decompose",
        "--q",
        "2",
        "--n",
        "6",
        "--poly",
        "x1*x2*x3 + x2*x4*x5 + x3*x5*x6 + x1*x4*x6",
        "--time-budget",
        "0",
    ]);
    let v: serde_json::Value = serde_json::from_str(stdout_of(&out)).unwrap();
    if v["result"]["found"] == serde_json::Value::Bool(false) {
        assert_eq!(out.status.code(), Some(1));
        assert_eq!(v["result"]["reason"], "budget exhausted");
    } else {
        // finding a decomposition before the first deadline check is fine
        assert_eq!(out.status.code(), Some(0));
    }
}

#[test]
fn experiment_truncates_on_time_budget() {
    // zero budget: partial results flush with the truncated flag set
    let tmp = std::env::temp_dir().join("fqlab_truncated");
    let _ = std::fs::remove_dir_all(&tmp);
    let out = run(&[
        "experiment",
        "--generator",
        "random",
        "--q",
        "2",
        "--n-min",
        "4",
        "--n-max",
        "8",
        "--count",
        "5",
        "--d",
        "3",
        "--samples",
        "1000",
        "--time-budget",
        "0",
        "--out-dir",
        tmp.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout_of(&out)).unwrap();
    assert_eq!(v["result"]["truncated"], true);
    assert!(tmp.join("results.csv").exists());
    assert!(tmp.join("summary.json").exists());
}

#[test]
fn random_quintic_sweep_records_biases() {
    // report-only sweep: random quintics over a 12-variable domain have
    // negligible bias; the harness just records what it sees
    let tmp = std::env::temp_dir().join("fqlab_random_sweep");
    let _ = std::fs::remove_dir_all(&tmp);
    let out = run(&[
        "experiment",
        "--generator",
        "random",
        "--q",
        "2",
        "--n-min",
        "12",
        "--n-max",
        "12",
        "--count",
        "3",
        "--d",
        "5",
        "--samples",
        "20000",
        "--seed",
        "11",
        "--out-dir",
        tmp.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout_of(&out)).unwrap();
    assert_eq!(v["result"]["rows"], 3);
    assert_eq!(v["result"]["truncated"], false);
    let max_bias = v["result"]["bias"]["max"].as_f64().unwrap();
    println!("random quintic sweep over 12 variables: max bias {max_bias:.4}");
    let csv = std::fs::read_to_string(tmp.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn golden_fixtures_match() {
    let cases: &[(&str, Vec<&str>)] = &[
        (
            "golden_bias.json",
            vec!["bias", "--q", "2", "--n", "2", "--poly", "x1*x2"],
        ),
        (
            "golden_gowers.json",
            vec!["gowers", "--q", "2", "--n", "2", "--poly", "x1*x2", "--d", "2"],
        ),
        (
            "golden_quadform.json",
            vec![
                "quadform",
                "--q",
                "3",
                "--n",
                "2",
                "--poly",
                "x1^2 + x2^2",
            ],
        ),
        (
            "golden_sample.json",
            vec!["sample", "--q", "2", "--n", "8", "--d", "5", "--seed", "1"],
        ),
        (
            "golden_survey.json",
            vec![
                "deriv-survey",
                "--q",
                "2",
                "--n",
                "2",
                "--poly",
                "x1*x2",
                "--threshold",
                "0.5",
            ],
        ),
        (
            "golden_nc_eval.json",
            vec![
                "nc-eval",
                "--file",
                "nc_depth1.txt",
                "--q",
                "2",
                "--n",
                "1",
                "--x",
                "1",
            ],
        ),
    ];
    for (fixture, args) in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(0), "{fixture}");
        let expect = std::fs::read_to_string(fixtures_dir().join(fixture))
            .unwrap_or_else(|_| panic!("missing fixture {fixture}"));
        assert_eq!(
            stdout_of(&out),
            expect,
            "golden fixture diff for {fixture}"
        );
    }
}

/// Acceptance criterion: byte-identical reports for identical manifests,
/// and empty golden-fixture diffs.
#[test]
fn acceptance_13_cli_determinism() {
    let start = std::time::Instant::now();
    let commands: Vec<Vec<&str>> = vec![
        vec!["bias", "--q", "2", "--n", "2", "--poly", "x1*x2"],
        vec![
            "bias", "--q", "2", "--n", "10", "--poly", "x1", "--mc", "--samples", "5000",
            "--seed", "9",
        ],
        vec!["gowers", "--q", "2", "--n", "4", "--poly", "x1*x2 + x3*x4", "--d", "2"],
        vec!["derive", "--q", "2", "--n", "3", "--poly", "x1*x2*x3", "--y", "1,0,0"],
        vec![
            "deriv-survey", "--q", "2", "--n", "4", "--poly", "x1*x2 + x3*x4",
            "--threshold", "0.2",
        ],
        vec!["quadform", "--q", "2", "--n", "3", "--poly", "x1*x2 + x1*x3 + x2*x3"],
        vec!["decompose", "--q", "2", "--n", "5", "--poly", "x1*x2*x3*x4*x5"],
        vec![
            "verify-decomp", "--q", "2", "--n", "3", "--poly", "x1*x2*x3 + x1",
            "--decomp", "dec_valid.json",
        ],
        vec![
            "lift", "--q", "2", "--n", "3", "--poly", "x1*x2*x3 + x1", "--w", "1,0,0",
            "--a", "0",
        ],
        vec![
            "constant-subspace", "--q", "2", "--n", "5", "--poly", "x1*x2*x3*x4*x5",
            "--mode", "greedy", "--rounds", "3", "--seed", "5",
        ],
        vec![
            "regularize", "--polys-file", "factor_pair.txt", "--epsilon", "0.3",
            "--seed", "0",
        ],
        vec![
            "sumset-subspace", "--set", "unit_vectors_f2_4.txt", "--k", "2",
            "--min-dim", "3",
        ],
        vec!["nc-eval", "--file", "nc_depth1.txt", "--q", "2", "--n", "1", "--x", "1"],
        vec!["nc-degree", "--file", "nc_depth1.txt", "--q", "2", "--n", "1", "--d", "2"],
        vec!["sample", "--q", "2", "--n", "8", "--d", "5", "--seed", "1"],
    ];
    for args in &commands {
        let a = run(args);
        let b = run(args);
        assert_eq!(
            a.stdout, b.stdout,
            "stdout drifted across runs for {:?}",
            args
        );
        assert_eq!(a.status.code(), b.status.code());
    }
    // the experiment artifacts are byte-stable too
    let tmp = std::env::temp_dir().join("fqlab_acc13");
    let _ = std::fs::remove_dir_all(&tmp);
    let run_exp = |dir: &str| {
        let out = run(&[
            "experiment",
            "--generator",
            "planted",
            "--q",
            "2",
            "--n-min",
            "6",
            "--n-max",
            "6",
            "--count",
            "2",
            "--d",
            "5",
            "--samples",
            "1000",
            "--seed",
            "3",
            "--out-dir",
            tmp.join(dir).to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        (
            std::fs::read(tmp.join(dir).join("results.csv")).unwrap(),
            std::fs::read(tmp.join(dir).join("summary.json")).unwrap(),
        )
    };
    let (csv_a, sum_a) = run_exp("a");
    let (csv_b, sum_b) = run_exp("b");
    assert_eq!(csv_a, csv_b, "experiment CSV drifted");
    assert_eq!(sum_a, sum_b, "experiment summary drifted");
    println!(
        "ACCEPTANCE 13 cli determinism: PASS ({} commands double-run byte-identical + experiment artifacts, {:?})",
        commands.len() + 1,
        start.elapsed()
    );
}
