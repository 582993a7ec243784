use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ripgap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ripgap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_is_deterministic() {
    let a = ripgap(&["gen", "--kind", "3sat5", "--n", "6", "--seed", "9"]);
    let b = ripgap(&["gen", "--kind", "3sat5", "--n", "6", "--seed", "9"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("p cnf 6 10\n"));
}

#[test]
fn infeasible_gen_is_input_error() {
    let out = ripgap(&["gen", "--kind", "3sat5", "--n", "4"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("multiple of 3"));
}

#[test]
fn reduce_writes_map_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = dir.path().join("psi.cnf");
    fs::write(&cnf, "p cnf 3 1\n1 2 -3 0\n").unwrap();
    let e13 = dir.path().join("phi.e13");
    let out = ripgap(&["reduce", "--input", p(&cnf), "--out", p(&e13)]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        fs::read_to_string(&e13).unwrap(),
        "p e13 10 6\n1 7 8 0\n5 7 9 0\n3 8 10 0\n1 4 0\n2 5 0\n3 6 0\n"
    );
    let map: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("phi.e13.map.json")).unwrap())
            .unwrap();
    assert_eq!(map["z"][0], serde_json::json!([7, 8, 9, 10]));
    assert_eq!(map["variable_clauses"], serde_json::json!([4, 5, 6]));
}

#[test]
fn malformed_input_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cnf");
    fs::write(&bad, "p cnf 2 1\n1 5 0\n").unwrap();
    assert_eq!(code(&ripgap(&["reduce", "--input", p(&bad)])), 2);
    assert_eq!(code(&ripgap(&["val", "--input", "/nonexistent/x.cnf"])), 2);
}

#[test]
fn val_brute_force_and_single() {
    let dir = tempfile::tempdir().unwrap();
    let e13 = dir.path().join("phi.e13");
    fs::write(&e13, "p e13 3 2\n1 2 0\n2 3 0\n").unwrap();
    let out = ripgap(&["val", "--input", p(&e13), "--format", "text"]);
    assert_eq!(stdout(&out), "1 TFT\n");
    let out = ripgap(&["val", "--input", p(&e13), "--assignment", "TTF"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["val"], "1/2");
    let out = ripgap(&["val", "--input", p(&e13), "--max-n", "2"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn build_then_rip() {
    let dir = tempfile::tempdir().unwrap();
    let e13 = dir.path().join("phi.e13");
    fs::write(&e13, "p e13 1 1\n1 0\n").unwrap();
    let mat = dir.path().join("x.mat");
    let out = ripgap(&[
        "build",
        "--input",
        p(&e13),
        "--epsilon",
        "1/5",
        "--xi",
        "1/10",
        "--out",
        p(&mat),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&mat).unwrap();
    assert!(text
        .starts_with("rip-matrix v1 5 3 rational\n1 0 0\n0 1 0\n0 0 0\n10 10 -10\n1/5 0 -1/5\n"));
    assert!(text.contains("c block clause 4 5"));

    let out = ripgap(&["rip", "--matrix", p(&mat), "--k", "1"]);
    assert_eq!(code(&out), 0);
    let r: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(r["k"], 1);
    assert_eq!(r["witness_support_max"], serde_json::json!([0]));

    let out = ripgap(&["rip", "--matrix", p(&mat), "--k", "2", "--delta", "1/2"]);
    let r: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(r["is_rip"], false);
    assert_eq!(r["delta"], "1/2");

    let out = ripgap(&["rip", "--matrix", p(&mat), "--k", "2", "--budget", "2"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn rip_is_independent_of_workers() {
    let dir = tempfile::tempdir().unwrap();
    let mat = dir.path().join("x.mat");
    fs::write(
        &mat,
        "rip-matrix v1 3 5 float\n0.3 -0.2 0.9 0.1 0.5\n0.7 0.4 -0.1 0.8 -0.6\n-0.5 0.6 0.2 0.3 0.4\n",
    )
    .unwrap();
    let one = ripgap(&["rip", "--matrix", p(&mat), "--k", "3", "--workers", "1"]);
    let four = ripgap(&["rip", "--matrix", p(&mat), "--k", "3", "--workers", "4"]);
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn gap_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let mat = dir.path().join("x.mat");
    fs::write(&mat, "rip-matrix v1 2 2 rational\n1 1\n0 0\n").unwrap();
    let args = [
        "gap",
        "--matrix",
        p(&mat),
        "--k",
        "2",
        "--delta",
        "1/5",
        "--lambda1",
        "1",
        "--lambda2",
        "2",
    ];
    let out = ripgap(&[&args[..], &["--format", "text"]].concat());
    assert_eq!(stdout(&out), "FarFromRip\n");
    let id = dir.path().join("id.mat");
    fs::write(&id, "rip-matrix v1 2 2 rational\n1 0\n0 1\n").unwrap();
    let out = ripgap(&[
        "gap",
        "--matrix",
        p(&id),
        "--k",
        "2",
        "--delta",
        "1/5",
        "--lambda1",
        "1",
        "--lambda2",
        "2",
    ]);
    let d: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(d["verdict"], "IsRip");
}

#[test]
fn transforms() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.mat");
    fs::write(&a, "rip-matrix v1 2 2 rational\n1 0\n0 1\n").unwrap();
    let out_path = dir.path().join("out.mat");
    let out = ripgap(&[
        "transform",
        "--op",
        "shift-down",
        "--matrix",
        p(&a),
        "--delta",
        "1/2",
        "--delta-prime",
        "1/5",
        "--lambda2",
        "3/2",
        "--out",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 0);
    let s: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(s["tau"], "1/80");
    assert!(fs::read_to_string(&out_path)
        .unwrap()
        .starts_with("rip-matrix v1 4 2 rational\n"));

    let out = ripgap(&[
        "transform",
        "--op",
        "shift-down",
        "--matrix",
        p(&a),
        "--delta",
        "1/2",
        "--delta-prime",
        "1/5",
        "--lambda2",
        "3/2",
        "--tau",
        "0",
        "--out",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 2);

    let out = ripgap(&[
        "transform",
        "--op",
        "square",
        "--matrix",
        p(&a),
        "--tau",
        "1/1000",
        "--out",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 0);
    assert!(fs::read_to_string(&out_path)
        .unwrap()
        .starts_with("rip-matrix v1 2 2 float\n"));

    let out = ripgap(&[
        "transform",
        "--op",
        "blockdiag",
        "--matrix",
        p(&a),
        "--matrix2",
        p(&a),
        "--out",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 0);
    assert!(fs::read_to_string(&out_path)
        .unwrap()
        .starts_with("rip-matrix v1 4 4 rational\n1 0 0 0\n"));

    let cert = dir.path().join("cert.json");
    let rip = ripgap(&["rip", "--matrix", p(&a), "--k", "2", "--out", p(&cert)]);
    assert_eq!(code(&rip), 0);
    let out = ripgap(&[
        "transform",
        "--op",
        "widen",
        "--matrix",
        p(&a),
        "--matrix2",
        p(&a),
        "--certificate",
        p(&cert),
        "--k",
        "2",
        "--delta",
        "1/10",
        "--out",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 0);
    let out = ripgap(&[
        "transform",
        "--op",
        "widen",
        "--matrix",
        p(&a),
        "--matrix2",
        p(&a),
        "--k",
        "2",
        "--delta",
        "1/10",
        "--out",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let e13 = dir.path().join("phi.e13");
    fs::write(&e13, "p e13 3 2\n1 2 0\n2 3 0\n").unwrap();
    let mat = dir.path().join("x.mat");
    let out = ripgap(&[
        "verify",
        "--input",
        p(&e13),
        "--format",
        "text",
        "--matrix-out",
        p(&mat),
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).lines().all(|l| l.starts_with("[PASS] ")));
    assert!(mat.exists());

    // with xi this large the restricted minimum visibly undershoots xi^2/18
    let out = ripgap(&[
        "verify",
        "--input",
        p(&e13),
        "--epsilon",
        "1/2",
        "--xi",
        "2/5",
        "--format",
        "text",
    ]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("[FAIL] restricted-minimum"));

    let cnf = dir.path().join("psi.cnf");
    fs::write(&cnf, "p cnf 3 1\n1 2 -3 0\n").unwrap();
    let out = ripgap(&["verify", "--input", p(&cnf)]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("build"));
}

#[test]
fn verify_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let e13 = dir.path().join("phi.e13");
    let gen = ripgap(&[
        "gen",
        "--kind",
        "e13",
        "--n",
        "4",
        "--planted",
        "--seed",
        "5",
        "--out",
        p(&e13),
    ]);
    assert_eq!(code(&gen), 0);
    let a = ripgap(&["verify", "--input", p(&e13)]);
    let b = ripgap(&["verify", "--input", p(&e13), "--workers", "3"]);
    assert_eq!(a.stdout, b.stdout);
}
