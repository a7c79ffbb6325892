use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn dlsat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dlsat"))
        .args(args)
        .env_remove("DLSAT_SOLVER")
        .output()
        .expect("run dlsat")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn example() -> String {
    data("example1.csv").to_string_lossy().into_owned()
}

#[test]
fn encode_is_byte_stable_and_writes_map() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.wcnf");
    let b = dir.path().join("b.wcnf");
    for out in [&a, &b] {
        let o = dlsat(&["encode", "--data", &example(), "--class", "H", "--nodes", "7", "-o", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let header: Vec<u64> = text.lines().next().unwrap()[7..]
        .split_whitespace()
        .map(|x| x.parse().unwrap())
        .collect();
    assert!(header[0] >= 168);
    let map = std::fs::read_to_string(dir.path().join("a.wcnf.map")).unwrap();
    assert_eq!(map.lines().count() as u64, header[0]);
    assert_eq!(map.lines().next().unwrap(), "1 s 1 1");
    assert_eq!(map.lines().nth(167).unwrap(), "168 u 7");
    assert_eq!(map.lines().nth(168).unwrap().split(' ').nth(1), Some("aux"));
}

#[test]
fn sparse_without_lambda_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.wcnf");
    let o = dlsat(&["encode", "--data", &example(), "--mode", "sparse", "--nodes", "3", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = dlsat(&["train", "--data", &example(), "--mode", "sparse"]);
    assert_eq!(o.status.code(), Some(2));
    let o = dlsat(&["train", "--data", &example(), "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_evaluate_explain_round() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    let o = dlsat(&["train", "--data", &example(), "--class", "H", "-o", model.to_str().unwrap()]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("size 6\n"), "{s}");
    assert!(s.contains("training_accuracy 1.0000"));

    let o = dlsat(&["evaluate", "--model", model.to_str().unwrap(), "--data", &example(), "--per-instance"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("accuracy,1.0000"));
    let table = s.split("\n\n").nth(1).unwrap();
    assert_eq!(table.lines().count(), 1 + 8);

    let o = dlsat(&["explain", "--model", model.to_str().unwrap(), "--data", &example(), "--row", "1"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("row 1: rule 1"));
    let o = dlsat(&["explain", "--model", model.to_str().unwrap(), "--data", &example(), "--row", "9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn evaluate_rejects_renamed_column() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    assert!(dlsat(&["train", "--data", &example(), "-o", model.to_str().unwrap()]).status.success());
    let renamed = dir.path().join("r.csv");
    let text = std::fs::read_to_string(data("example1.csv")).unwrap().replacen("A,", "Z,", 1);
    std::fs::write(&renamed, text).unwrap();
    let o = dlsat(&["evaluate", "--model", model.to_str().unwrap(), "--data", renamed.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no feature `A`"));
}

#[test]
fn sparse_train_reports_offset() {
    let o = dlsat(&["train", "--data", &example(), "--mode", "sparse", "--lambda", "0.5"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("solver_cost 8"), "{s}");
    assert!(s.contains("objective errors 4 node_cost 4 offset 12 total 20"), "{s}");
}

#[test]
fn greedy_and_explicit_orders() {
    let o = dlsat(&["train", "--data", &example(), "--order", "greedy"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("order "));
    let o = dlsat(&["train", "--data", &example(), "--order", "1,0"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("order 1,0"));
    let o = dlsat(&["train", "--data", &example(), "--order", "1,7"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn inconsistent_data_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b,y\n1,0,p\n1,0,q\n0,1,p\n").unwrap();
    let o = dlsat(&["train", "--data", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn node_cap_exit_four() {
    let o = dlsat(&["train", "--data", &example(), "--nodes", "2", "--step", "1", "--max-nodes", "3"]);
    assert_eq!(o.status.code(), Some(4));
}

fn synthetic_csv(dir: &Path) -> PathBuf {
    let mut text = String::from("x,y,z,label\n");
    for i in 0..50 {
        let x = i * 7 % 10;
        let y = i * 3 % 5;
        let z = if i % 3 == 0 { "a" } else { "b" };
        let label = if x > 4 || z == "a" { "pos" } else { "neg" };
        writeln!(text, "{x},{y},{z},{label}").unwrap();
    }
    let path = dir.join("syn.csv");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn cv_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synthetic_csv(dir.path());
    let args = [
        "cv", "--data", csv.to_str().unwrap(), "--quantize", "2", "--mode", "sparse", "--lambda", "0.05", "--seed", "3",
    ];
    let a = dlsat(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let mut with_jobs = args.to_vec();
    with_jobs.extend(["--jobs", "4"]);
    let b = dlsat(&with_jobs);
    assert_eq!(stdout(&a), stdout(&b));
    let lines: Vec<String> = stdout(&a).lines().map(String::from).collect();
    assert_eq!(lines.len(), 1 + 5 + 2);
    assert!(lines[6].starts_with("mean,"));

    let mut too_many = args.to_vec();
    too_many.extend(["--folds", "60"]);
    assert_eq!(dlsat(&too_many).status.code(), Some(2));
}

#[test]
fn solve_prints_evaluation_format() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("t.wcnf");
    std::fs::write(&f, "p wcnf 2 3 10\n10 1 2 0\n3 -1 0\n2 -2 0\n").unwrap();
    let o = dlsat(&["solve", f.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "s OPTIMUM FOUND\no 2\nv 01\n");
}
