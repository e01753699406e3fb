use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

fn golden(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dissquad"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[track_caller]
fn assert_golden(args: &[&str], name: &str) {
    let o = run(args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), golden(name), "output of {args:?} differs from {name}");
}

#[test]
fn quadratize_goldens() {
    assert_golden(&["quadratize", "--input", &fixture("toy.ode")], "toy.json");
    assert_golden(&["quadratize", "--input", &fixture("stabilizers.ode")], "stabilizers.json");
    assert_golden(&["quadratize", "--input", &fixture("quadratic.ode")], "quadratic.json");
    assert_golden(
        &["quadratize", "--input", &fixture("cubic.ode"), "--rewrite", "most-lifted"],
        "cubic_most_lifted.json",
    );
}

#[test]
fn dissipate_goldens() {
    let eq = fixture("three_equilibria.points");
    assert_golden(&["dissipate", "--input", &fixture("three_equilibria.ode"), "--equilibria", &eq], "three_equilibria.json");
    assert_golden(&["dissipate", "--input", &fixture("duffing.ode"), "--equilibria", "(0, 0)"], "duffing.json");
    assert_golden(
        &[
            "dissipate",
            "--input",
            &fixture("bistable.ode"),
            "--equilibria",
            "(0); (3/10)",
            "--rewrite",
            "most-lifted",
        ],
        "bistable.json",
    );
}

#[test]
fn output_is_independent_of_thread_count() {
    let args = ["quadratize", "--input", &fixture("stabilizers.ode")];
    let outs: Vec<String> = ["1", "4"]
        .iter()
        .map(|t| {
            let o = Command::new(env!("CARGO_BIN_EXE_dissquad"))
                .args(args)
                .env("DISSQUAD_THREADS", t)
                .output()
                .unwrap();
            stdout(&o)
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn toy_has_one_new_variable() {
    let v: serde_json::Value = serde_json::from_str(&stdout(&run(&["quadratize", "--input", &fixture("toy.ode")]))).unwrap();
    assert_eq!(v["new_variables"], serde_json::json!(["y1 = x^2"]));
}

#[test]
fn reads_stdin_and_writes_files() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_dissquad"))
        .args(["quadratize", "--input", "-", "--format", "text"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"x' = x^3\n").unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(stdout(&o).contains("y1 = x^2"));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = run(&["quadratize", "--input", &fixture("toy.ode"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(out).unwrap(), golden("toy.json"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ode");
    std::fs::write(&bad, "x' = 2x\n").unwrap();
    let o = run(&["quadratize", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1, column 7"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());

    let o = run(&["quadratize", "--input", &fixture("stabilizers.ode"), "--budget", "3"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["quadratize", "--input", &fixture("stabilizers.ode"), "--budget", "3", "--fallback"]);
    assert_eq!(o.status.code(), Some(0));

    // x = 1 is an unstable equilibrium of the three-equilibria system
    let o = run(&["dissipate", "--input", &fixture("three_equilibria.ode"), "--equilibria", "(1)"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("(1)"));
    // not an equilibrium at all
    let o = run(&["dissipate", "--input", &fixture("three_equilibria.ode"), "--equilibria", "(3)"]);
    assert_eq!(o.status.code(), Some(4));
    // wrong arity is a parse error of the point list
    let o = run(&["dissipate", "--input", &fixture("duffing.ode"), "--equilibria", "(0)"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["dissipate", "--input", &fixture("float_bistable.ode"), "--equilibria", "(0)", "--mode", "exact"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("exact mode"));
    let o = run(&["dissipate", "--input", &fixture("float_bistable.ode"), "--equilibria", "(0)"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["mode"], "numeric-eigen");

    let o = run(&["quadratize", "--input", "/nonexistent/system.ode"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));

    // a non-positive horizon is rejected by the integrator
    let o = run(&["simulate", "--input", &fixture("cubic.ode"), "--x0", "0.5", "--t-end", "0"]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn simulate_figure1_contrast() {
    let o = run(&["simulate", "--input", &fixture("cubic_stable_lift.ode"), "--x0", "0.1, 0.01", "--t-end", "10"]);
    let csv = stdout(&o);
    assert!(csv.starts_with("t,x,y\n"));
    assert!(csv.ends_with("# status: completed\n"));
    let last: Vec<f64> = csv
        .lines()
        .rfind(|l| !l.starts_with('#'))
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(last[0], 10.0);
    assert!(last[1].hypot(last[2]) < 1e-3);

    let o = run(&["simulate", "--input", &fixture("cubic_unstable_lift.ode"), "--x0", "0.1, 0.01", "--t-end", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("# status: blow-up at t = "));
}

#[test]
fn simulate_bistable_lift() {
    let o = run(&[
        "simulate",
        "--input",
        &fixture("bistable.ode"),
        "--x0",
        "0.4",
        "--t-end",
        "200",
        "--lift",
        "--equilibria",
        &fixture("bistable.points"),
        "--rewrite",
        "most-lifted",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["lambda"], "0");
    let end = v["lifted"]["final_state"].as_array().unwrap();
    assert!((end[0].as_f64().unwrap() - 0.3).abs() < 1e-3);
    assert!((end[1].as_f64().unwrap() - 0.09).abs() < 1e-3);
    assert!(v["max_invariant_drift"].as_f64().unwrap() < 1e-6);
}

#[test]
fn check_subcommand() {
    let o = run(&["check", "--input", &fixture("cubic_unstable_lift.ode"), "--equilibria", "(0, 0)"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["equilibria"][0]["verdict"], "not-dissipative");
    assert_eq!(v["equilibria"][0]["exact_eigenvalues"], serde_json::json!(["-1", "10"]));

    let o = run(&["check", "--self-test", "--seed", "11", "--count", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 5);
    assert!(stdout(&o).lines().all(|l| l.ends_with("10/10")));
}

#[test]
fn bench_rows() {
    let o = run(&["bench", "--n-min", "1", "--n-max", "3", "--exact", "--timeout", "60"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = stdout(&o);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,dimension,equilibria,new_vars,lambda,t_quadratize,t_dissipate_numeric,t_dissipate_exact"
    );
    let cols: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    let structure: Vec<(&str, &str, &str)> = cols.iter().map(|c| (c[1].as_str(), c[2].as_str(), c[3].as_str())).collect();
    assert_eq!(structure, [("2", "2", "1"), ("4", "4", "2"), ("6", "8", "4")]);
    assert!(cols.iter().all(|c| !c[7].is_empty()));

    // a tiny limit marks the exact cell as timed out
    let o = run(&["bench", "--n-min", "4", "--n-max", "4", "--exact", "--timeout", "0.000001"]);
    assert!(stdout(&o).lines().nth(1).unwrap().ends_with(",>0.000001"), "{}", stdout(&o));
}
