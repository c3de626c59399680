use std::process::{Command, Output};

use serde_json::Value;

fn sumset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sumset")).args(args).env_remove("SUMSET_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let o = sumset(args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn classify_finds_a_cyclic_cover() {
    let v =
        json(&["classify", "--group", "7", "--A", "0,1", "--B", "0,1", "--eps", "1/4", "--d", "1", "--delta", "1/7"]);
    assert_eq!(v["tag"], "TypeIII_2");
    assert_eq!(v["witness"]["kind"], "cover");
    assert_eq!(v["witness"]["hom"]["N"], 7);

    let capped = json(&[
        "classify", "--group", "7", "--A", "0,1", "--B", "0,1", "--eps", "1/4", "--d", "1", "--delta", "1/7",
        "--n-max", "5",
    ]);
    assert_ne!(capped["tag"], "TypeIII_2");
}

#[test]
fn analyze_reports_the_stabilizer() {
    let v = json(&["analyze", "--group", "6", "--A", "0,2,4", "--B", "0,2"]);
    assert_eq!(v["stabilizer"], serde_json::json!([0, 2, 4]));
    assert_eq!(v["sumset_size"], 3);
    assert_eq!(v["kneser"]["valid"], true);
}

#[test]
fn kneser_verification_reports_no_anomalies() {
    let o = sumset(&["verify", "--kneser", "--max-size", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).trim_end().ends_with("0 anomalies"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(sumset(&["bogus"]).status.code(), Some(2));
    assert_eq!(sumset(&["analyze", "--group", "6", "--A", "0,9", "--B", "0"]).status.code(), Some(2));
    assert_eq!(
        sumset(&["classify", "--group", "0", "--A", "0", "--B", "0", "--eps", "1/4", "--d", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(sumset(&["scan", "--group", "64", "--eps", "1/4", "--d", "2"]).status.code(), Some(2));
}

#[test]
fn classification_json_reads_back_as_input() {
    let v = json(&[
        "classify",
        "--group",
        "2x4",
        "--A",
        "(0,0),(0,1),(1,0)",
        "--B",
        "0,1,2",
        "--eps",
        "1/4",
        "--d",
        "4",
        "--delta",
        "1/8",
    ]);
    let dir = std::env::temp_dir().join(format!("sumset-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("a.json");
    std::fs::write(&path, serde_json::to_string(&v["A"]).unwrap()).unwrap();
    let arg = format!("@{}", path.display());
    let again = json(&[
        "classify", "--group", "2x4", "--A", &arg, "--B", "0,1,2", "--eps", "1/4", "--d", "4", "--delta", "1/8",
    ]);
    assert_eq!(again, v);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn thread_variable_does_not_change_output() {
    let args = ["scan", "--group", "3x3", "--eps", "1/4", "--d", "6", "--max-gap", "1/9"];
    let runs: Vec<Output> = ["1", "3", "8"]
        .iter()
        .map(|t| Command::new(env!("CARGO_BIN_EXE_sumset")).args(args).env("SUMSET_THREADS", t).output().unwrap())
        .collect();
    assert!(runs.iter().all(|o| o.stdout == runs[0].stdout && o.stderr == runs[0].stderr));
    let text = stdout(&runs[0]);
    assert!(text.starts_with("group;|A|;|B|;sumset;popular;gap_num;gap_den;tag;k_index"));
}

#[test]
fn generators_produce_verified_sets() {
    let v = json(&[
        "gen", "qp", "--group", "6", "--C", "0,3,1,4", "--D", "0,3", "--K", "0,3", "--c0", "1", "--d0", "0", "--A0",
        "1", "--B0", "0",
    ]);
    assert!(v.is_object());
    let bad = sumset(&[
        "gen", "qp", "--group", "6", "--C", "0,1", "--D", "0,3", "--K", "0,3", "--c0", "0", "--d0", "0", "--A0", "0",
        "--B0", "0",
    ]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("C is not a union"));

    let n = json(&["gen", "niveau", "--N", "4", "--shift", "1/2"]);
    assert_eq!(n["size"], 5);
    assert_eq!(n["min_weight"], 3);
}

#[test]
fn oracle_returns_a_witness() {
    let v = json(&["oracle", "--group", "8", "--A", "0,1,4", "--B", "0,2,4", "--eps", "1/3", "--delta", "1/8"]);
    assert_eq!(v["stage"], "periodization");
    assert_eq!(v["move_cost"], serde_json::json!({"num": 1, "den": 4}));
    assert_eq!(v["subcritical"], true);
}
