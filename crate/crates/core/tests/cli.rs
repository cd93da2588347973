mod common;

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_insiderflow"));
    c.env_remove("INSIDERFLOW_OUT_DIR");
    c
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn ok(cmd: &mut Command) -> String {
    let out = run(cmd);
    assert!(out.status.success(), "{:?}", out.status);
    String::from_utf8(out.stdout).unwrap()
}

fn data(dir: &Path) -> (String, String, String) {
    let unsw = common::write(dir, "unsw.csv", &common::unsw_csv(1500, 0.1, 1));
    let train = common::write(dir, "nsl_train.csv", &common::nsl_csv(1500, 0.2, 2));
    let test = common::write(dir, "nsl_test.csv", &common::nsl_csv(800, 0.2, 3));
    let s = |p: std::path::PathBuf| p.to_str().unwrap().to_string();
    (s(unsw), s(train), s(test))
}

fn evaluate_args(dir: &Path, out: &str) -> Vec<String> {
    let (unsw, train, test) = data(dir);
    [
        "evaluate",
        "--trials",
        "2",
        "--seed",
        "3",
        "--unsw-csv",
        &unsw,
        "--nsl-train",
        &train,
        "--nsl-test",
        &test,
        "--sample-size",
        "1000",
        "--nsl-train-size",
        "600",
        "--nsl-test-size",
        "400",
        "--out",
        out,
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[test]
fn ingest_train_detect() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (unsw, ..) = data(d);
    let table = d.join("flows.json");
    let stdout = ok(bin()
        .args(["ingest", "--schema", "unsw-nb15", "--input", &unsw, "--out"])
        .arg(&table));
    assert!(stdout.contains("records"));

    let model = d.join("model.json");
    ok(bin()
        .arg("train")
        .arg("--input")
        .arg(&table)
        .arg("--out")
        .arg(&model)
        .args(["--nu", "0.05"]));
    let json = std::fs::read_to_string(&model).unwrap();
    assert!(json.contains("insiderflow-detector"));

    let verdicts = d.join("out/verdicts.csv");
    let trace = d.join("out/trace.csv");
    ok(bin()
        .arg("detect")
        .arg("--model")
        .arg(&model)
        .args(["--schema", "unsw-nb15", "--input", &unsw, "--out"])
        .arg(&verdicts)
        .arg("--trace")
        .arg(&trace));
    let text = std::fs::read_to_string(&verdicts).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("flow_id,bicluster,ocsvm,joint,truth"));
    assert_eq!(lines.count(), 1500);
    for row in text.lines().skip(1) {
        let f: Vec<&str> = row.rsplitn(5, ',').collect();
        let (joint, svm, bic) = (f[1] == "anomaly", f[2] == "anomaly", f[3] == "anomaly");
        assert_eq!(joint, bic && svm, "{row}");
    }
    let trace = std::fs::read_to_string(&trace).unwrap();
    assert!(trace.starts_with("step,kind,index,id,degree,score\n"));
}

#[test]
fn evaluate_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let stdout = ok(bin().args(evaluate_args(dir.path(), out.to_str().unwrap())));
    assert!(stdout.contains("unsw-nb15: 2 trials"));
    assert!(stdout.contains("nsl-kdd: 2 trials"));
    let report = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 1 + 4 + 2 + 1);
    assert!(out.join("config.toml").exists());

    let rerendered = ok(bin().arg("report").arg("--summary").arg(out.join("summary.json")));
    assert_eq!(rerendered, report);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let env_out = dir.path().join("from_env");
    let mut args = evaluate_args(dir.path(), "unused");
    args.truncate(args.len() - 2);
    ok(bin().args(&args).env("INSIDERFLOW_OUT_DIR", &env_out));
    assert!(env_out.join("report.csv").exists());

    let flag_out = dir.path().join("from_flag");
    args.extend(["--out".to_string(), flag_out.to_str().unwrap().to_string()]);
    ok(bin().args(&args).env("INSIDERFLOW_OUT_DIR", &env_out));
    assert!(flag_out.join("report.csv").exists());
}

#[test]
fn empty_input_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let empty = common::write(dir.path(), "empty.csv", "");
    let out = run(bin()
        .args(["train", "--schema", "nsl-kdd", "--input"])
        .arg(&empty)
        .arg("--out")
        .arg(dir.path().join("m.json")));
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.starts_with("error: EmptyInput"), "{stderr}");
}

#[test]
fn missing_model_and_bad_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin()
        .arg("detect")
        .arg("--model")
        .arg(dir.path().join("absent.json"))
        .args(["--input", "x", "--out", "y"]));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(run(&mut bin()).status.code(), Some(2));
    assert_eq!(run(bin().args(["train", "--bogus"])).status.code(), Some(2));
    assert_eq!(run(bin().arg("--help")).status.code(), Some(0));
}
