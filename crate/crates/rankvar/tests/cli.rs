//! Contract tests for the command-line surface: exit codes, error wording,
//! output files, and the reproducibility of reports.

use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rankvar"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

// ----- exit codes -----

#[test]
fn missing_seed_is_a_usage_error() {
    let out = run(&["simulate", "--tail", "exponential", "--n", "100", "--p", "10",
        "--noise-sd", "1", "--j0", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_text(&out).contains("--seed"), "{}", stderr_text(&out));
}

#[test]
fn item_count_flags_are_mutually_exclusive_and_required() {
    let both = run(&["simulate", "--tail", "exponential", "--n", "100", "--p", "10",
        "--p-rule", "n^2", "--noise-sd", "1", "--j0", "1", "--seed", "1"]);
    assert_eq!(both.status.code(), Some(2));
    let neither = run(&["simulate", "--tail", "exponential", "--n", "100",
        "--noise-sd", "1", "--j0", "1", "--seed", "1"]);
    assert_eq!(neither.status.code(), Some(2));
}

#[test]
fn family_specific_parameters_are_enforced() {
    let out = run(&["simulate", "--tail", "pareto", "--n", "100", "--p", "10",
        "--noise-sd", "1", "--j0", "1", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_text(&out).contains("--alpha"), "{}", stderr_text(&out));

    let out = run(&["rates", "--family", "polynomial", "--n", "100", "--alpha", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_text(&out).contains("--p"), "{}", stderr_text(&out));
}

#[test]
fn malformed_depth_rules_name_the_flag() {
    let out = run(&["simulate", "--tail", "exponential", "--n", "100", "--p", "10",
        "--noise-sd", "1", "--j0", "n^^2", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_text(&out).contains("--j0"), "{}", stderr_text(&out));
}

#[test]
fn invalid_worker_override_names_the_variable() {
    let out = bin()
        .args(["rates", "--family", "exponential", "--n", "100", "--alpha", "1"])
        .env("RANKVAR_WORKERS", "three")
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_text(&out).contains("RANKVAR_WORKERS"), "{}", stderr_text(&out));
}

#[test]
fn data_errors_exit_3_and_cite_the_line() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "item,value\nA,1\nA,abc\n").expect("write");
    let out = run(&["bootstrap", "--input", path.to_str().unwrap(), "--format",
        "replicates", "--stat", "mean", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_text(&out);
    assert!(err.contains("line 3") && err.contains("abc"), "{err}");
}

#[test]
fn binomial_bound_violations_cite_line_and_item() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("counts.csv");
    std::fs::write(&path, "item,successes,trials\nA,3,10\nB,12,10\n").expect("write");
    let out = run(&["bootstrap", "--input", path.to_str().unwrap(), "--format",
        "binomial", "--stat", "proportion", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_text(&out);
    assert!(err.contains("line 3") && err.contains('B') && err.contains("12"), "{err}");
}

#[test]
fn single_class_input_is_a_validation_error() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("one_class.csv");
    std::fs::write(&path, "label,g1,g2\nx,1,2\nx,3,4\n").expect("write");
    let out = run(&["topset", "--input", path.to_str().unwrap(), "--j", "1",
        "--seed", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_text(&out).contains("class"), "{}", stderr_text(&out));
}

#[test]
fn missing_input_file_exits_3_naming_the_path() {
    let out = run(&["bootstrap", "--input", "/nonexistent/items.csv", "--format",
        "replicates", "--stat", "mean", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_text(&out).contains("/nonexistent/items.csv"), "{}", stderr_text(&out));
}

#[test]
fn unreachable_calibration_target_exits_4() {
    let out = run(&["calibrate", "--tail", "exponential", "--n", "10", "--p", "5",
        "--j0", "1", "--reps", "200", "--seed", "1", "--target", "0.99",
        "--sd-lo", "5", "--sd-hi", "6"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr_text(&out).contains("calibration"), "{}", stderr_text(&out));
}

#[test]
fn incompatible_stat_and_format_exit_3() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("items.csv");
    std::fs::write(&path, "item,value\nA,1\nB,2\n").expect("write");
    let out = run(&["bootstrap", "--input", path.to_str().unwrap(), "--format",
        "replicates", "--stat", "proportion", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

// ----- documented headline numbers -----

#[test]
fn simulate_example_reproduces_the_headline_probability() {
    let out = run(&["simulate", "--tail", "exponential", "--rate", "1", "--n", "500",
        "--p-rule", "0.0005*n^2", "--noise-sd", "3.5", "--reps", "1000", "--j0", "1",
        "--j0", "n^0.25", "--mode", "prefix", "--seed", "7"]);
    let json = stdout_json(&out);
    let outcomes = json["payload"]["outcomes"].as_array().expect("outcomes");
    let top = outcomes[0]["prefix"]["probability"].as_f64().expect("probability");
    assert!((top - 0.909).abs() <= 0.035, "depth-1 probability {top}");
    assert_eq!(outcomes[1]["depth"].as_u64(), Some(5));
    assert_eq!(json["payload"]["items"].as_u64(), Some(125));
}

#[test]
fn rates_example_reproduces_the_headline_rate() {
    let out = run(&["rates", "--family", "polynomial", "--n", "10000", "--p", "10000",
        "--alpha", "2"]);
    let json = stdout_json(&out);
    let rate = json["payload"]["rate"].as_f64().expect("rate");
    assert!((rate - 39.8107170553).abs() < 1e-6, "rate {rate}");
}

// ----- reports and side files -----

#[test]
fn out_flag_writes_report_table_and_plot() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out_path = dir.path().join("run.json");
    let out = run(&["simulate", "--tail", "exponential", "--n", "100", "--p", "15",
        "--noise-sd", "1.5", "--reps", "300", "--j0", "1", "--j0", "4", "--mode", "both",
        "--seed", "9", "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty(), "report goes to the file, not stdout");

    let json: Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).expect("report")).expect("JSON");
    assert_eq!(json["meta"]["command"], "simulate");
    assert_eq!(json["meta"]["seed"], 9);
    assert!(json["meta"].get("wall_clock_seconds").is_none(), "timing off by default");

    let table = std::fs::read_to_string(dir.path().join("run.table.csv")).expect("table");
    let mut lines = table.lines();
    assert_eq!(
        lines.next(),
        Some("depth_spec,depth,prefix_probability,prefix_std_error,set_probability,set_std_error")
    );
    assert_eq!(lines.count(), 2, "one row per depth");

    let plot = std::fs::read_to_string(dir.path().join("run.plot.csv")).expect("plot");
    assert!(plot.starts_with("depth,prefix_probability,set_probability"), "{plot}");
}

#[test]
fn timing_flag_adds_wall_clock_to_metadata() {
    let out = run(&["--timing", "rates", "--family", "exponential", "--n", "100",
        "--alpha", "1"]);
    let json = stdout_json(&out);
    assert!(json["meta"]["wall_clock_seconds"].as_f64().expect("wall clock") >= 0.0);
}

#[test]
fn config_echo_is_sufficient_to_reproduce_the_run() {
    let out = run(&["simulate", "--tail", "stretched", "--lambda", "0.85", "--gamma",
        "0.5", "--n", "150", "--p", "25", "--noise-sd", "1.2", "--reps", "300", "--j0",
        "2", "--seed", "31"]);
    let json = stdout_json(&out);
    let cfg: rankvar::ExperimentConfig =
        serde_json::from_value(json["payload"]["config"].clone()).expect("config echo");
    let report = rankvar::run_rank_experiment(&cfg).expect("rerun");
    let echoed = json["payload"]["outcomes"][0]["prefix"]["probability"]
        .as_f64()
        .expect("probability");
    let rerun = report.outcomes[0].prefix.expect("prefix").probability;
    assert_eq!(rerun, echoed, "rerunning the echoed config must reproduce the report");
}

#[test]
fn small_resample_counts_warn_but_run() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("items.csv");
    std::fs::write(&path, "item,value\nA,1\nA,2\nB,3\nB,4\n").expect("write");
    let out = run(&["bootstrap", "--input", path.to_str().unwrap(), "--format",
        "replicates", "--stat", "mean", "--B", "50", "--seed", "4"]);
    assert!(out.status.success());
    assert!(stderr_text(&out).contains("--B 50"), "{}", stderr_text(&out));
}

#[test]
fn bootstrap_reports_expose_count_imbalance() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("ragged.csv");
    let mut text = String::from("item,value\n");
    text.push_str("A,1\n");
    for i in 0..10 {
        text.push_str(&format!("B,{i}\n"));
    }
    std::fs::write(&path, text).expect("write");
    let out = run(&["bootstrap", "--input", path.to_str().unwrap(), "--format",
        "replicates", "--stat", "mean", "--B", "200", "--seed", "4"]);
    let json = stdout_json(&out);
    assert_eq!(json["payload"]["count_ratio"].as_f64(), Some(10.0));
}

#[test]
fn tailfit_and_qq_run_on_replicate_input() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("scores.csv");
    let mut text = String::from("item,value\n");
    // Deterministic spread of positive scores with a heavy-ish upper tail.
    for i in 1..=60 {
        let v = 1.0 + (i as f64 / 61.0).powi(2) * 10.0;
        text.push_str(&format!("s{i},{v}\n"));
    }
    std::fs::write(&path, text).expect("write");

    let out = run(&["tailfit", "--input", path.to_str().unwrap(), "--method", "hill",
        "--k", "10"]);
    let json = stdout_json(&out);
    assert!(json["payload"]["alpha"].as_f64().expect("alpha") > 0.0);
    assert_eq!(json["payload"]["trace"].as_array().map(Vec::len), Some(10));

    let out = run(&["qq", "--input", path.to_str().unwrap(), "--tail", "exponential",
        "--rate", "0.5", "--out", dir.path().join("qq.json").to_str().unwrap()]);
    assert!(out.status.success());
    let plot = std::fs::read_to_string(dir.path().join("qq.plot.csv")).expect("plot");
    assert!(plot.starts_with("observed,theoretical"), "{plot}");
    assert_eq!(plot.lines().count(), 61, "header plus one pair per item");
}

#[test]
fn required_n_reports_grid_walk_and_plot_series() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out_path = dir.path().join("need.json");
    let out = run(&["required-n", "--tail", "exponential", "--p", "20", "--noise-sd",
        "2", "--reps", "300", "--j0", "1", "--seed", "2", "--target", "0.8",
        "--n-grid", "50,100,200,400,800", "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success());
    let json: Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).expect("report")).expect("JSON");
    let search = &json["payload"]["searches"][0];
    assert!(search["required"].as_u64().is_some(), "{search}");
    assert!(search["critical_rate"].as_f64().is_some(), "light tail has a rate series");
    let plot = std::fs::read_to_string(dir.path().join("need.plot.csv")).expect("plot");
    assert!(plot.starts_with("j0,required_n,critical_rate"), "{plot}");
}

#[test]
fn topset_emits_reference_sets_in_rank_order() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("classes.csv");
    std::fs::write(&path, "label,g1,g2,g3\n0,5,3,1\n0,6,4,2\n1,1,2,3\n1,2,3,4\n")
        .expect("write");
    let out = run(&["topset", "--input", path.to_str().unwrap(), "--j", "1", "--j", "3",
        "--B", "300", "--seed", "6"]);
    let json = stdout_json(&out);
    let outcomes = json["payload"]["outcomes"].as_array().expect("outcomes");
    assert_eq!(outcomes[0]["reference"].as_array().map(Vec::len), Some(1));
    assert_eq!(outcomes[1]["reference"].as_array().map(Vec::len), Some(3));
    let prob = outcomes[1]["probability"].as_f64().expect("probability");
    assert!((prob - 1.0).abs() < 1e-12, "top-3 of 3 items is always reproduced");
}

#[test]
fn help_lists_every_subcommand() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    for sub in ["simulate", "rates", "bootstrap", "topset", "calibrate", "required-n",
        "tailfit", "qq"] {
        assert!(text.contains(sub), "help must list {sub}: {text}");
    }
}
