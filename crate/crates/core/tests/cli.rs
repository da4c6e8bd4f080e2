use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rating-debias"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_inputs(dir: &Path) -> (String, String) {
    let ratings = dir.join("ratings.csv");
    fs::write(&ratings, "course,slot,value\n0,0,0\n0,1,10\n1,0,1\n1,1,3\n").unwrap();
    let order = dir.join("order.txt");
    fs::write(&order, "# two courses, two groups\ngroup 2 2\n0 0 0\n0 1 1\n1 0 0\n1 1 1\n").unwrap();
    (ratings.display().to_string(), order.display().to_string())
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn fit_prints_tables_and_writes_biases() {
    let dir = tempfile::tempdir().unwrap();
    let (ratings, order) = write_inputs(dir.path());
    let bias = dir.path().join("bias.csv");
    let text = stdout(&run(&[
        "fit",
        "--ratings",
        &ratings,
        "--order",
        &order,
        "--lambda",
        "0",
        "--bias-out",
        bias.to_str().unwrap(),
    ]));
    assert!(text.contains("course,quality\n0,5\n1,2\n"), "{text}");
    assert!(text.contains("course,slot,bias\n0,0,-5\n0,1,5\n1,0,-1\n1,1,1\n"), "{text}");
    assert!(text.contains("# lambda: 0"));
    let written = fs::read_to_string(&bias).unwrap();
    assert_eq!(written.lines().count(), 5);
    assert!(written.starts_with("course,slot,value"));
}

#[test]
fn fit_json_at_infinity() {
    let dir = tempfile::tempdir().unwrap();
    let (ratings, order) = write_inputs(dir.path());
    let text = stdout(&run(&["fit", "--ratings", &ratings, "--order", &order, "--lambda", "inf", "--json"]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["x_hat"], serde_json::json!([5.0, 2.0]));
    assert_eq!(v["diagnostics"]["converged"], serde_json::json!(true));
}

#[test]
fn cv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (ratings, order) = write_inputs(dir.path());
    let args = [
        "cv",
        "--ratings",
        &ratings,
        "--order",
        &order,
        "--lambda-grid",
        "0,2^-1,inf",
        "--extensions",
        "4",
        "--seed",
        "3",
    ];
    let a = stdout(&run(&args));
    assert_eq!(a, stdout(&run(&args)));
    assert!(a.starts_with("lambda,cv_error\n0,"), "{a}");
    assert_eq!(a.lines().filter(|l| l.contains(',') && !l.starts_with('#')).count(), 1 + 3 + 1 + 2 + 1 + 4);
}

#[test]
fn simulate_writes_csv_and_honours_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "scenario = binary\nn = 10\nruns = 3\nseed = 5\nextensions = 3\nestimators = mean, lambda=0\n").unwrap();
    let out = dir.path().join("rows.csv");
    let status = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--runs",
        "4",
        "--out",
        out.to_str().unwrap(),
        "--summary",
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 2);
    assert!(text.lines().nth(1).unwrap().starts_with("binary,mean,4,10,"));
    assert!(String::from_utf8_lossy(&status.stderr).contains("lambda=0: mean sq_error"));

    let again = stdout(&run(&["simulate", "--config", cfg.to_str().unwrap(), "--runs", "4"]));
    assert_eq!(again, text);
}

#[test]
fn errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let (ratings, _) = write_inputs(dir.path());
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "group 2 2\n0 0 7\n").unwrap();
    let out = run(&["fit", "--ratings", &ratings, "--order", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    let out = run(&["simulate", "--scenario", "tree_total", "--n", "10"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("tree_total"));
    let out = run(&["fit", "--ratings", &ratings, "--order", &ratings, "--lambda", "-1"]);
    assert!(!out.status.success());
}
