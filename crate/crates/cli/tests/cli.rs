use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

use quiverforge::formats::{AlgebraDoc, GraphDoc, RepDoc};
use quiverforge::stack::{builtin_stack, GerbeEntry};

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quiverforge")).args(args).output().expect("binary runs")
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_quiverforge"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json_of(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("not JSON ({e}): {}", stdout(o)))
}

/// The JSON status agrees with the exit code.
fn assert_consistent(o: &Output) {
    let v = json_of(o);
    assert_eq!(v["schema_version"], 1);
    let expected = match code(o) {
        0 => "pass",
        1 => "fail",
        2 => "unknown",
        64 => "error",
        c => panic!("unexpected exit code {c}"),
    };
    assert_eq!(v["status"], expected);
}

#[test]
fn classify_a3() {
    let o = run(&["graph", "classify", "--file", &fixture("a3.json")]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("positive-definite (A3)"));
}

#[test]
fn delta_of_affine_d4_and_missing_delta() {
    let o = run(&["--json", "graph", "delta", "--file", &fixture("affine_d4.json")]);
    assert_consistent(&o);
    assert_eq!(json_of(&o)["delta"], serde_json::json!([2, 1, 1, 1, 1]));
    let o = run(&["graph", "delta", "--file", &fixture("a3.json")]);
    assert_eq!(code(&o), 1);
}

#[test]
fn fixtures_round_trip() {
    let dir: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures"].iter().collect();
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        let again = if v.get("edges").is_some() {
            let d = GraphDoc::from_json(&text).unwrap();
            let e = serde_json::to_string(&d).unwrap();
            assert_eq!(GraphDoc::from_json(&e).unwrap(), d);
            e
        } else if v.get("quiver").is_some() {
            let d = RepDoc::from_json(&text).unwrap();
            let e = serde_json::to_string(&d).unwrap();
            assert_eq!(RepDoc::from_json(&e).unwrap(), d);
            e
        } else {
            let d = AlgebraDoc::from_json(&text).unwrap();
            let e = serde_json::to_string(&d).unwrap();
            assert_eq!(AlgebraDoc::from_json(&e).unwrap(), d);
            e
        };
        let _: Value = serde_json::from_str(&again).unwrap();
        seen += 1;
    }
    assert!(seen >= 5);
}

#[test]
fn emitted_rep_reloads_to_the_same_rep() {
    let o = run(&["--json", "stability", "normalize", "--file", &fixture("affine_a1_chart.json"), "--n", "1", "--i", "1"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let v = json_of(&o);
    let doc: RepDoc = serde_json::from_value(v["rep"].clone()).unwrap();
    let text = serde_json::to_string(&doc).unwrap();
    assert_eq!(RepDoc::from_json(&text).unwrap(), doc);
    let (_, rho) = doc.build::<quiverforge::Rational>().unwrap();
    let (_, orig) = RepDoc::from_json(&std::fs::read_to_string(fixture("affine_a1_chart.json")).unwrap())
        .unwrap()
        .build::<quiverforge::Rational>()
        .unwrap();
    assert_eq!(rho.dims, orig.dims);
    let u2 = rho.mats[2].get(0, 0).clone();
    assert_eq!(u2, quiverforge::scalar::int(1));
    // the gauge class is kept: the loop u2 v2 has the same value
    assert_eq!(rho.mats[2].mul(&rho.mats[3]), orig.mats[2].mul(&orig.mats[3]));
}

#[test]
fn adhm_grid_has_one_jump_at_the_origin() {
    let o = run(&["--json", "monad", "eval", "--adhm", &fixture("fixture_n1.json"), "--grid", "5"]);
    assert_consistent(&o);
    let v = json_of(&o);
    assert_eq!(v["jumps"], serde_json::json!([[0, 0]]));
    assert_eq!(v["generic"], 1);
    assert_eq!(v["points"].as_array().unwrap().len(), 25);
}

#[test]
fn stack_builtins_pass() {
    for name in ["an:1", "an:2", "an-torus:2", "framed-a1"] {
        let o = run(&["--json", "stack", "verify", "--builtin", name]);
        assert_eq!(code(&o), 0, "{name}: {}", stdout(&o));
        assert_consistent(&o);
        assert_eq!(json_of(&o)["failing"], 0);
    }
    let o = run(&["stack", "verify", "--builtin", "d4", "--effort-degree", "10"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("PASS chart") && out.contains("PASS commutativity") && out.contains("G02(X2)·G02(Y2)"));
}

#[test]
fn stack_descriptor_from_stdin_and_corrupted() {
    let d = builtin_stack("an:1").unwrap();
    let o = run_stdin(&["stack", "verify", "--file", "-"], &d.to_json());
    assert_eq!(code(&o), 0, "{}", stdout(&o));

    let mut bad = builtin_stack("framed-a1").unwrap();
    bad.charts[1].gerbe = vec![GerbeEntry { vertex: "2".into(), c: vec![vec!["2 uL2".into()]], c_inv: vec![vec!["1/2 uL2.inv".into()]] }];
    let o = run_stdin(&["--json", "stack", "verify", "--file", "-"], &bad.to_json());
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert_consistent(&o);
    assert!(json_of(&o)["failing"].as_u64().unwrap() > 0);
}

#[test]
fn other_fields() {
    for f in ["qi", "novikov"] {
        let o = run(&["--field", f, "stack", "verify", "--builtin", "an:1"]);
        assert_eq!(code(&o), 0, "{f}");
    }
}

#[test]
fn membership_exit_codes() {
    let file = fixture("commuting.json");
    let o = run(&["--json", "algebra", "member", "--file", &file, "--element", "x y x - x x y"]);
    assert_eq!(code(&o), 0);
    assert_consistent(&o);
    let o = run(&["--json", "algebra", "member", "--file", &file, "--element", "x"]);
    assert_eq!(code(&o), 2);
    assert_consistent(&o);
    let o = run(&["algebra", "reduce", "--file", &file, "--element", "y x - x y + 1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("nf = e_0"));
    let o = run(&["--effort-degree", "1", "algebra", "reduce", "--file", &file, "--element", "y x"]);
    assert_eq!(code(&o), 64);
}

#[test]
fn element_as_json_terms() {
    let file = fixture("commuting.json");
    let terms = r#"[{"coeff": 1, "path": ["x", "y"]}, {"coeff": {"num": -1, "den": 1}, "path": ["y", "x"]}]"#;
    let o = run(&["algebra", "member", "--file", &file, "--element", terms]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn dg_check_and_perturbation() {
    let g = fixture("affine_a1.json");
    assert_eq!(code(&run(&["algebra", "dg-check", "--file", &g, "--framing", "1"])), 0);
    let o = run(&["algebra", "dg-check", "--file", &g, "--framing", "1", "--perturb", "1=ab0 a0 ab0 a0"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn schema_violations_exit_64() {
    let o = run_stdin(&["graph", "classify", "--file", "-"], r#"{"schema_version": 2, "vertices": [], "edges": []}"#);
    assert_eq!(code(&o), 64);
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema version"));
    let o = run_stdin(&["graph", "classify", "--file", "-"], r#"{"schema_version": 1, "vertices": [{"id": "a"}], "edges": [{"endA": "a", "endB": "b"}]}"#);
    assert_eq!(code(&o), 64);
    let o = run_stdin(&["rep", "check", "--file", "-"], r#"{"schema_version": 1, "quiver": {"kind": "adhm"}, "dims": {"0": 1}, "matrices": {"x": [[1, 2]]}}"#);
    assert_eq!(code(&o), 64);
    assert_eq!(code(&run(&["graph", "classify"])), 64);
    assert_eq!(code(&run(&["--field", "z", "stack", "verify", "--builtin", "an:1"])), 64);
    let o = run(&["--json", "stack", "verify", "--builtin", "an:0x"]);
    assert_eq!(code(&o), 64);
    assert_consistent(&o);
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn corrupted_moment_map_breaks_d_squared() {
    let text = std::fs::read_to_string(fixture("adhm_n2.json")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(code(&run_stdin(&["monad", "d2", "--file", "-"], &text)), 0);
    v["matrices"]["j"] = serde_json::json!([[1, 0]]);
    let bad = v.to_string();
    let o = run_stdin(&["--json", "rep", "moment", "--file", "-"], &bad);
    assert_eq!(code(&o), 1);
    let o = run_stdin(&["--json", "monad", "d2", "--file", "-"], &bad);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert_consistent(&o);
    assert!(!json_of(&o)["failures"].as_array().unwrap().is_empty());
    let o = run_stdin(&["monad", "build", "--file", "-"], &bad);
    assert_eq!(code(&o), 1);
}

#[test]
fn stability_verdicts_and_witnesses() {
    let f = fixture("adhm_n2.json");
    let o = run(&["stability", "check", "--file", &f, "--zeta", "-1"]);
    assert_eq!(code(&o), 0);
    let o = run(&["--json", "stability", "check", "--file", &f, "--zeta", "1"]);
    assert_eq!(code(&o), 1);
    let w = json_of(&o)["witness"].to_string();
    let o = run_stdin(&["stability", "witness", "--file", &f, "--zeta", "1", "--witness", "-"], &w);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    // (1, 0) spans a subspace that is not invariant under y
    let bogus = r#"{"schema_version": 1, "role": "sub", "basis": {"0": [[1, 1]]}}"#;
    let o = run_stdin(&["stability", "witness", "--file", &f, "--zeta", "1", "--witness", "-"], bogus);
    assert_eq!(code(&o), 1);
}

#[test]
fn exactness_of_a_stable_point() {
    let o = run(&["--json", "monad", "exactness", "--file", &fixture("fixture_n1.json")]);
    assert_eq!(code(&o), 0);
    assert_consistent(&o);
}

#[test]
fn chart_verify_and_region() {
    let o = run(&["rep", "chart-verify", "--builtin", "framed-a1", "--chart", "U1"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("framing U1"));
    assert_eq!(code(&run(&["rep", "chart-verify", "--builtin", "an:1", "--chart", "U9"])), 64);
    let o = run(&[
        "stability",
        "mc-region",
        "--n",
        "1",
        "--point",
        r#"{"torus": 1, "x": 1, "y": {"novikov": [{"exp": 1, "coeff": 1}]}}"#,
        "--areas",
        "[[1, 1], [2, 2]]",
    ]);
    assert_eq!(code(&o), 0);
}

#[test]
fn thread_cap() {
    let o = Command::new(env!("CARGO_BIN_EXE_quiverforge"))
        .args(["stack", "verify", "--builtin", "an:2"])
        .env("QUIVERFORGE_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_quiverforge"))
        .args(["stack", "verify", "--builtin", "an:2"])
        .env("QUIVERFORGE_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&o), 64);
}
