use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn halftest(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halftest"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn halftest")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, body: &str) {
    std::fs::write(dir.join(name), body).unwrap();
}

const GAUSS2: &str = r#"{"marginal":{"kind":"standard_gaussian","dim":2},
"noise":{"kind":"clean","target":[1,0]},"samples":100,"seeds":[7]}"#;

fn learn_config(kind: &str, trials: usize, n: usize) -> String {
    format!(
        r#"{{"marginal":{{{kind},"dim":3}},
"noise":{{"kind":"massart","eta":0.1,"profile":"constant","target":[1,-0.5,0.3]}},
"learner":{{"lambda":1,"gamma":1,"eps":0.05,"delta":0.3333,"noise":{{"kind":"massart","eta":0.1}},
  "tester":{{"lambda":3,"gamma":1,"delta":0.1}},"n1":{n},"n2":{n}}},
"trials":{trials},"seeds":[11],"eval_samples":5000}}"#
    )
}

#[test]
fn sample_writes_header_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "g.json", GAUSS2);
    let a = halftest(&["sample", "--config", "g.json", "--out", "a.csv"], dir.path());
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    halftest(&["sample", "--config", "g.json", "--out", "b.csv"], dir.path());
    let x = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let y = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert_eq!(x, y);
    assert_eq!(x.lines().next(), Some("x1,x2,y"));
    assert_eq!(x.lines().count(), 101);
    let r = json(&a);
    assert_eq!(r["rows"], 100);
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
    assert!(r["constants"]["c1"].is_number());
}

#[test]
fn sample_binary_round_trips_through_test() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "g.json", GAUSS2);
    let a = halftest(&["sample", "--config", "g.json", "--out", "a.bin"], dir.path());
    assert_eq!(a.status.code(), Some(0));
    let t = halftest(&["test", "spectral", "--data", "a.bin", "--theta", "0.5"], dir.path());
    assert!(matches!(t.status.code(), Some(0 | 1)));
    assert_eq!(json(&t)["verdict"]["test"], "spectral");
}

#[test]
fn zero_samples_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "z.json", &GAUSS2.replace("\"samples\":100", "\"samples\":0"));
    let out = halftest(&["sample", "--config", "z.json", "--out", "z.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("samples"));
    assert!(!dir.path().join("z.csv").exists());
}

#[test]
fn missing_files_are_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = halftest(&["sample", "--config", "nope.json", "--out", "a.csv"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let out = halftest(&["test", "spectral", "--data", "nope.csv"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn malformed_inputs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.json", "{");
    let out = halftest(&["learn", "--config", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    write(dir.path(), "bad.csv", "x1,x2,y\n1,2\n");
    let out = halftest(&["test", "spectral", "--data", "bad.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = halftest(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn hypercontractivity_accepts_all_zero_data() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "z.csv", "x1,x2,y\n0,0,1\n0,0,-1\n0,0,1\n");
    let out = halftest(&["test", "hypercontractivity", "--data", "z.csv", "--gamma", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"]["accepted"], true);
}

#[test]
fn stationary_rejects_an_empty_strip() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "far.csv", "x1,x2,y\n5,0,1\n-5,1,-1\n4,-1,1\n");
    let out = halftest(&["test", "stationary", "--data", "far.csv", "--w", "1,0", "--sigma", "0.05"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["verdict"]["accepted"], false);
}

#[test]
fn disagreement_angle_above_quarter_pi_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "g.json", GAUSS2);
    halftest(&["sample", "--config", "g.json", "--out", "a.csv"], dir.path());
    let out = halftest(&["test", "disagreement", "--data", "a.csv", "--theta", "0.9"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("theta"));
}

#[test]
fn oracle_fourth_moment_example() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "e.csv", "x1,x2,y\n1,0,1\n1,0,1\n0,1,1\n");
    let out = halftest(&["oracle", "fourth-moment", "--data", "e.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!((r["oracle"]["value"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-9);
    assert!(r["library"]["sos_value"].as_f64().unwrap() >= 2.0 / 3.0 - 1e-5);
    assert_eq!(r["pass"], true);
}

#[test]
fn oracle_gradient_and_erm_pass_on_clean_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = GAUSS2.replace("\"dim\":2", "\"dim\":4").replace("[1,0]", "[1,0,0,0]");
    write(dir.path(), "g.json", &cfg);
    halftest(&["sample", "--config", "g.json", "--out", "a.csv"], dir.path());
    let g = halftest(&["oracle", "gradient", "--data", "a.csv", "--seed", "3"], dir.path());
    assert_eq!(g.status.code(), Some(0));
    assert!(json(&g)["library"]["relative_deviation"].as_f64().unwrap() <= 1e-5);
    let e = halftest(&["oracle", "erm", "--data", "a.csv"], dir.path());
    assert_eq!(e.status.code(), Some(0));
    assert_eq!(json(&e)["oracle"]["opt"].as_f64(), Some(0.0));
}

#[test]
fn oracle_structural_and_strip_stats_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = GAUSS2
        .replace("\"dim\":2", "\"dim\":3")
        .replace("[1,0]", "[1,0,0]")
        .replace("\"samples\":100", "\"samples\":20000");
    write(dir.path(), "g.json", &cfg);
    halftest(&["sample", "--config", "g.json", "--out", "a.csv"], dir.path());
    let s = halftest(&["oracle", "structural", "--data", "a.csv", "--w-star", "1,0,0"], dir.path());
    assert_eq!(s.status.code(), Some(0), "{}", String::from_utf8_lossy(&s.stdout));
    let t = halftest(&["oracle", "strip-stats", "--data", "a.csv", "--seed", "1"], dir.path());
    assert!(json(&t)["library"]["z_scores"].as_array().unwrap().len() == 4);
}

#[test]
fn unknown_oracle_check_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = halftest(&["oracle", "bogus", "--data", "a.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn learn_is_deterministic_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "l.json", &learn_config(r#""kind":"standard_gaussian""#, 1, 20000));
    let a = halftest(&["learn", "--config", "l.json", "--out", "r1"], dir.path());
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    halftest(&["learn", "--config", "l.json", "--out", "r2"], dir.path());
    let p = |d: &str| std::fs::read(dir.path().join(d).join("trial_0000.json")).unwrap();
    assert_eq!(p("r1"), p("r2"));
    let csv = std::fs::read_to_string(dir.path().join("r1/trials.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("trial,seed,accepted,error,sigma,wall_time"));
    assert_eq!(csv.lines().count(), 2);
    assert!(dir.path().join("r1/summary.json").exists());
}

#[test]
fn learn_rejects_two_point_mass() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "t.json",
        &learn_config(r#""kind":"two_point_mass","spread":10"#, 10, 20000),
    );
    let out = halftest(&["learn", "--config", "t.json", "--jobs", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["acceptance_rate"].as_f64().unwrap() <= 0.1);
}

#[test]
fn seed_flag_changes_the_sample() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "g.json", GAUSS2);
    halftest(&["sample", "--config", "g.json", "--out", "a.csv"], dir.path());
    halftest(&["sample", "--config", "g.json", "--seed", "8", "--out", "b.csv"], dir.path());
    let x = std::fs::read(dir.path().join("a.csv")).unwrap();
    let y = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn bench_quick_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = halftest(&["bench", "--quick", "--repeats", "1", "--out", "b.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["cases"].as_array().unwrap().len(), 4);
    assert!(dir.path().join("b.csv").exists());
}
