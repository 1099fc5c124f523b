use std::path::Path;
use std::process::{Command, Output};

const QUICK: [&str; 8] = ["--const", "c_d=1e-3", "--const", "c_p=10", "--const", "c_tau=100", "--const", "c_leaf=0.1"];

fn dtrecon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dtrecon"))
        .args(args)
        .env_remove("DTRECON_SEED")
        .output()
        .unwrap()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn test_on_realizable_instance_accepts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let mut args = vec!["test", "--n", "8", "--s", "2", "--eps", "0.2", "--fn", "dictator", "--kappa", "2"];
    args.extend(QUICK);
    args.extend(["--trials", "3", "--out", out.to_str().unwrap()]);
    let o = dtrecon(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = rows(&out);
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[9] == "accept"));
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let mut args = vec!["reconstruct", "--n", "10", "--s", "4", "--eps", "0.25", "--seed", "11"];
        args.extend(QUICK);
        args.extend(["--trials", "2", "--queries", "200", "--out", out.to_str().unwrap()]);
        assert_eq!(dtrecon(&args).status.code(), Some(0));
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn dictator_scores_on_stdout() {
    let mut args = vec!["scores", "--n", "6", "--fn", "dictator", "--p", "0.5", "--eps", "0.05"];
    args.extend(QUICK);
    let o = dtrecon(&args);
    assert_eq!(o.status.code(), Some(0));
    let mut rd = csv::Reader::from_reader(o.stdout.as_slice());
    let header = rd.headers().unwrap().clone();
    let row = rd.records().next().unwrap().unwrap();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let s1: f64 = row[col("score_1")].parse().unwrap();
    assert!((s1 - 0.25).abs() < 0.05, "score_1 = {s1}");
    for i in 2..=6 {
        let si: f64 = row[col(&format!("score_{i}"))].parse().unwrap();
        assert!(si.abs() < 0.05);
    }
}

#[test]
fn generate_writes_a_parseable_tree() {
    let o = dtrecon(&["generate", "--n", "12", "--s", "5", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let t = dtrecon::DecisionTree::parse(String::from_utf8(o.stdout).unwrap().trim()).unwrap();
    assert!(t.size() <= 5);
}

#[test]
fn bad_input_exits_2() {
    let o = dtrecon(&["test", "--eps", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("dtrecon:"));
    let o = dtrecon(&["test", "--const", "c_nope=1"]);
    assert_eq!(o.status.code(), Some(2));
}
