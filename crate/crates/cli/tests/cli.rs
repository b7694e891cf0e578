use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chainphase"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn run_with_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = bin().args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn parse(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("chainphase-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn analyze_exit_codes() {
    assert_eq!(run(&["analyze", "--model", "ising"]).status.code(), Some(0));
    let fig2 = run(&["analyze", "--model", "fig2"]);
    assert_eq!(fig2.status.code(), Some(3));
    assert!(parse(&fig2)["witness"]["cycle"].as_array().unwrap().len() >= 2);

    // a lone off-diagonal entry is not Hermitian
    let bad = scratch("bad.json");
    let mut m = vec![vec![json!([0.0, 0.0]); 4]; 4];
    m[0][1] = json!([1.0, 0.0]);
    std::fs::write(&bad, json!({ "d": 2, "matrix": m }).to_string()).unwrap();
    let out = run(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(parse(&out)["error"].as_str().unwrap().contains("Hermitian"));
}

#[test]
fn non_commuting_term_exits_with_two() {
    // 1 - |ψ><ψ| with ψ = (|00> + |01> + |11>)/√3 does not commute with its translate
    let a = 1.0 / 3.0;
    let psi = [1.0, 1.0, 0.0, 1.0];
    let m: Vec<Vec<Value>> = (0..4)
        .map(|i| (0..4).map(|j| json!([f64::from(u8::from(i == j)) - a * psi[i] * psi[j], 0.0])).collect())
        .collect();
    let path = scratch("noncommuting.json");
    std::fs::write(&path, json!({ "d": 2, "matrix": m }).to_string()).unwrap();
    let out = run(&["analyze", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(parse(&out)["commuting"], false);
}

#[test]
fn sweeps() {
    let deg = parse(&run(&["degeneracy", "--model", "ising", "--N", "2..8"]));
    for n in 2..=8 {
        assert_eq!(deg["degeneracy"][n.to_string()], 2);
    }
    let census = parse(&run(&["census", "--model", "ising", "--N", "3"]));
    assert_eq!(census["census"]["3"]["dims"], json!({ "0": 2, "2": 6 }));
    let fig2 = parse(&run(&["degeneracy", "--model", "fig2", "--N", "2..5"]));
    assert_eq!(fig2["degeneracy"], json!({ "2": 4, "3": 8, "4": 16, "5": 32 }));
}

#[test]
fn graph_outputs() {
    let dot = scratch("g.dot");
    let out = run(&["graph", "--model", "ising", "--dot", dot.to_str().unwrap()]);
    assert_eq!(parse(&out), json!({ "M": [[1, 0], [0, 1]], "R": [[0, 1], [1, 0]], "blocks": [[1, 1], [1, 1]] }));
    let text = std::fs::read_to_string(dot).unwrap();
    assert!(text.starts_with("digraph G {") && text.contains("a0 -> a0 [label=\"k=1\"]"));
}

#[test]
fn mps_parent_pipes_into_solve_x() {
    let parent = run(&["bridge", "mps-parent", "--chi", "2", "--seed", "7"]);
    assert_eq!(parent.status.code(), Some(0));
    let out = run_with_stdin(&["bridge", "solve-x"], &parent.stdout);
    let x = parse(&out);
    assert_eq!(x["status"], "found");
    assert!(x["residual"].as_f64().unwrap() < 1e-10);
    assert!(x["min_eig"].as_f64().unwrap() > 0.0);

    let out = run_with_stdin(&["bridge", "commutify", "--N", "3"], &parent.stdout);
    let c = parse(&out);
    assert_eq!(c["correspondence"][0]["holds"], true);
}

#[test]
fn ground_and_canonical() {
    let g = parse(&run(&["ground", "--model", "ising", "--N", "5"]));
    let states = &g["ground_states"]["5"];
    assert_eq!(states["count"], 2);
    assert_eq!(states["states"][0]["mps"]["bond_dim"], 1);
    let c = run(&["canonical", "--model", "ising"]);
    assert_eq!(c.status.code(), Some(0));
    assert_eq!(parse(&c)["k"], 2);
    assert_eq!(run(&["canonical", "--model", "fig2"]).status.code(), Some(3));
}

#[test]
fn verify_table() {
    let json_path = scratch("verify.json");
    let out = run(&["verify", "--model", "zero(2)", "--N", "2..4", "--json", json_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().filter(|l| l.contains("pass")).count() == 12, "{text}");
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(json_path).unwrap()).unwrap();
    assert_eq!(doc["passed"], true);
}

#[test]
fn bad_arguments() {
    assert_eq!(run(&["degeneracy", "--model", "ising", "--N", "1"]).status.code(), Some(1));
    assert_eq!(run(&["analyze", "--model", "ising", "--tol", "0"]).status.code(), Some(1));
    assert_eq!(run(&["analyze", "--model", "heisenberg"]).status.code(), Some(1));
    assert_eq!(run(&["analyze"]).status.code(), Some(1));
}
