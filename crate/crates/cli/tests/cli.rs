use std::fs;
use std::process::{Command, Output};

fn sdg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdg")).args(args).output().expect("spawn sdg")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "sdg failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn column(text: &str, col: usize) -> Vec<String> {
    text.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().to_string()).collect()
}

#[test]
fn solve_dahlquist_one_step_is_dg_value() {
    // p = 1 DG with unit step on u' = -u gives 4/11 at t = 1.
    let out = sdg(&["solve", "--scheme", "imsdg", "--p", "1", "--K", "40", "--steps", "1", "--tend", "1"]);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,comp0"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[0], 1.0);
    assert!((row[1] - 4.0 / 11.0).abs() < 1e-14, "{}", row[1]);
    assert!(lines.next().is_none());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with('#'));
}

#[test]
fn zero_lambda_keeps_the_state() {
    let text = stdout(&sdg(&["solve", "--lambda", "0", "--steps", "5", "--scheme", "exsdg"]));
    let col = column(&text, 1);
    assert_eq!(col.len(), 5);
    assert!(col.iter().all(|v| v.parse::<f64>().unwrap() == 1.0));
}

#[test]
fn runge_kutta_and_vanderpol() {
    let text = stdout(&sdg(&["solve", "--problem", "vanderpol", "--scheme", "rk4", "--steps", "8", "--tend", "0.5"]));
    assert_eq!(text.lines().next(), Some("t,comp0,comp1"));
    assert_eq!(text.lines().count(), 9);
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("5.0000000000000000e-1,"));
}

#[test]
fn converge_reports_orders() {
    let text = stdout(&sdg(&["converge", "--scheme", "imsdg", "--p", "1", "--K", "2", "--dt", "0.25,0.125,0.0625"]));
    let orders = column(&text, 2);
    assert_eq!(orders[0], "");
    for o in &orders[1..] {
        let o: f64 = o.parse().unwrap();
        assert!((o - 3.0).abs() < 0.3, "order {o}");
    }
    let zero = stdout(&sdg(&["converge", "--lambda", "0", "--dt", "0.5,0.25"]));
    assert!(column(&zero, 2).iter().all(|c| c.is_empty()));
}

#[test]
fn stability_pgm_marks_origin_stable() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("r.pgm");
    let csv = dir.path().join("r.csv");
    let out = sdg(&[
        "stability", "--scheme", "imsdg", "--p", "2", "--K", "4", "--re", "-1,1", "--im", "-1,1", "--nx", "3",
        "--ny", "3", "--pgm", pgm.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
    ]);
    let summary = stdout(&out);
    assert!(summary.contains("total_cells=9"), "{summary}");
    let img = fs::read_to_string(&pgm).unwrap();
    let tokens: Vec<&str> = img.split_whitespace().collect();
    assert_eq!(&tokens[..4], &["P2", "3", "3", "255"]);
    assert_eq!(tokens.len(), 4 + 9);
    // Centre pixel is λΔt = 0.
    assert_eq!(tokens[4 + 4], "0");
    // Right column has Re = 1 > 0, outside the region.
    assert_eq!(tokens[4 + 2], "255");
    let table = fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().next(), Some("re,im,abs_am"));
    assert_eq!(table.lines().count(), 10);
}

#[test]
fn single_level_mlrun_matches_baseline() {
    let text = stdout(&sdg(&["mlrun", "--levels", "4", "--iters", "4", "--dt", "0.2"]));
    assert_eq!(text.lines().next(), Some("iter,err_1level,err_mlevel"));
    assert_eq!(column(&text, 1), column(&text, 2));
    let two = stdout(&sdg(&["mlrun", "--levels", "4,2", "--iters", "4", "--dt", "0.2"]));
    let last = two.lines().last().unwrap();
    let e: Vec<f64> = last.split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    assert!(e[1] < e[0], "{last}");
}

#[test]
fn config_file_and_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# dahlquist run\nlambda = 0\nsteps = 3\n").unwrap();
    let path = cfg.to_str().unwrap();
    let text = stdout(&sdg(&["solve", "--config", path]));
    assert_eq!(text.lines().count(), 4);
    assert!(column(&text, 1).iter().all(|v| v.parse::<f64>().unwrap() == 1.0));
    // Flag beats file.
    let text = stdout(&sdg(&["solve", "--config", path, "--steps", "2", "--lambda", "-1"]));
    assert_eq!(text.lines().count(), 3);
    assert!(column(&text, 1).iter().all(|v| v.parse::<f64>().unwrap() < 1.0));
}

#[test]
fn unknown_config_key_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "steps = 3\nstpes = 4\n").unwrap();
    let out = sdg(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stpes"));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(sdg(&["solve", "--bogus"]).status.code(), Some(2));
    assert_eq!(sdg(&["solve", "--scheme", "nope"]).status.code(), Some(2));
    assert_eq!(sdg(&["solve", "--steps", "0"]).status.code(), Some(2));
    assert_eq!(sdg(&["stability", "--scheme", "rk4"]).status.code(), Some(2));
    assert_eq!(sdg(&["converge", "--dt", "0.1,0.2"]).status.code(), Some(2));
    assert_eq!(sdg(&["mlrun", "--p", "6", "--levels", "4,2"]).status.code(), Some(2));
}

#[test]
fn solver_failure_exits_three() {
    let out = sdg(&["solve", "--problem", "bad", "--scheme", "imsdg", "--p", "1", "--K", "2", "--steps", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("newton"));
}

#[test]
fn output_is_deterministic() {
    let args = ["converge", "--problem", "vanderpol", "--dt", "0.1,0.05", "--ref-steps", "100", "--jobs", "2"];
    let a = stdout(&sdg(&args));
    let b = stdout(&sdg(&args));
    assert_eq!(a, b);
}
