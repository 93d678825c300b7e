use std::io::Write;
use std::process::{Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_ws2s");

fn ws2s(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn ws2s_stdin(args: &[&str], input: &str) -> Output {
    let mut child =
        Command::new(BIN).args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const EXAMPLE: &str = "~ ex2 X: sing(X) & X = {e}";

#[test]
fn decide_running_example() {
    for engine in ["lazy", "classical", "both"] {
        let o = ws2s_stdin(&["decide", "-", "--engine", engine], EXAMPLE);
        assert_eq!(stdout(&o).trim(), "UNSAT", "{engine}");
        assert_eq!(o.status.code(), Some(1));
        let o = ws2s_stdin(&["decide", "-", "--engine", engine, "--mode", "valid"], EXAMPLE);
        assert_eq!(stdout(&o).trim(), "INVALID");
        assert_eq!(o.status.code(), Some(1));
    }
}

#[test]
fn decide_from_file() {
    let path = std::env::temp_dir().join(format!("ws2s-cli-{}.txt", std::process::id()));
    std::fs::write(&path, "ex2 X: sing(X) & X = {e}\n").unwrap();
    let o = ws2s(&["decide", path.to_str().unwrap(), "--stats"]);
    std::fs::remove_file(&path).unwrap();
    assert_eq!(stdout(&o).trim(), "SAT");
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("term_nodes"));
}

#[test]
fn decide_valid_formula() {
    let o = ws2s_stdin(&["decide", "-", "--mode", "valid", "--engine", "both"], "all2 X: X sub X");
    assert_eq!(stdout(&o).trim(), "VALID");
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn optimisation_flags_are_accepted() {
    let flags = ["--no-lazy-rt", "--no-subsumption", "--flatten", "--nondet-union", "--no-antiprenex"];
    for flag in flags {
        let o = ws2s_stdin(&["decide", "-", flag], EXAMPLE);
        assert_eq!(stdout(&o).trim(), "UNSAT", "{flag}");
    }
}

#[test]
fn errors_exit_with_two() {
    let o = ws2s_stdin(&["decide", "-"], "X sub (");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("syntax error"));
    let o = ws2s(&["decide", "/nonexistent/formula.txt"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ws2s(&["gen", "--family", "sub", "--n", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn resource_limits_exit_with_two() {
    let o = ws2s(&["bench", "--family", "horn", "--n", "6", "--cap", "50", "--csv"]);
    assert!(stdout(&o).lines().nth(1).unwrap().contains(",CAP,"));
    let f = ws2s(&["gen", "--family", "horn", "--n", "6"]);
    let o = ws2s_stdin(&["decide", "-", "--timeout", "0"], &stdout(&f));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gen_prints_family_members() {
    let o = ws2s(&["gen", "--family", "cnst", "--n", "4"]);
    assert_eq!(stdout(&o), "ex2 X: X = {LRLRLRLR} & X = {LRLRLRLR}\n");
    // generated text decides like the family member
    let o = ws2s_stdin(&["decide", "-"], &stdout(&o));
    assert_eq!(stdout(&o).trim(), "SAT");
}

#[test]
fn bench_rows_are_ordered() {
    let o = ws2s(&["bench", "--family", "horn", "--n-range", "3..8", "--csv", "--jobs", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "family,n,engine,result,time_ms,term_nodes,fixpoint_iterations,subsumption_prunes,automaton_states"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), 9);
        assert_eq!((row[0], row[1], row[2], row[3]), ("horn", &*(k + 3).to_string(), "lazy", "SAT"));
        assert!(row[5].parse::<u64>().is_ok() && row[8].is_empty());
    }
}

#[test]
fn bench_classical_columns() {
    let o = ws2s(&["bench", "--family", "sub", "--n", "3", "--engine", "both", "--csv"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let rows: Vec<Vec<&str>> = out.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][2..4], ["lazy", "UNSAT"]);
    assert_eq!(rows[1][2..4], ["classical", "UNSAT"]);
    assert!(rows[1][5..8].iter().all(|c| c.is_empty()));
    assert!(rows[1][8].parse::<u64>().unwrap() > 0);
}

#[test]
fn difftest_passes() {
    let o = ws2s(&["difftest", "--count", "30", "--seed", "11", "--depth", "2"]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}");
    assert!(out.contains("30 formulae: 0 failures"));
}
