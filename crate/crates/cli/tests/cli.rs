use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const DRIFT: &str = r#"
[triplet]
gamma = 0.0
measure = { kind = "power", plus = { c = 0.5, alpha = 0.5, x_min = 1.0 }, minus = { c = 2.0, alpha = 2.0, x_min = 1.0 } }

[params]
x_geometric = { from = 1.0, to = 1e8, points = 17 }
"#;

const SYMMETRIC: &str = r#"
[triplet]
gamma = 0.0
measure = { kind = "power", plus = { c = 1.0, alpha = 1.2 }, minus = { c = 1.0, alpha = 1.2 } }

[params]
x_grid = [0.1, 1.0, 10.0, 100.0, 1000.0, 1e4, 1e5, 1e6]
"#;

const BROWNIAN: &str = r#"
[triplet]
gamma = 0.5
sigma2 = 1.0
measure = { kind = "atoms", atoms = [[1.5, 1.0], [-2.5, 1.0]] }

[sim]
seed = 1
steps = 5
workers = 4
"#;

fn setup(body: &str) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, body).unwrap();
    (dir, path)
}

fn run(args: &[&str], config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levy-bounds"))
        .arg(args[0])
        .arg(config)
        .args(&args[1..])
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn curve_header_and_symmetric_zeros() {
    let (_d, cfg) = setup(SYMMETRIC);
    let o = run(&["curve"], &cfg);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("x,N,M,T,D,A,U,criterion"));
    assert_eq!(text.lines().count(), 9);
    assert!(column(&text, "criterion").iter().all(|&c| c == 0.0));
}

#[test]
fn curve_drift_fixture_near_closed_form() {
    let (_d, cfg) = setup(DRIFT);
    let text = stdout(&run(&["curve"], &cfg));
    let xs = column(&text, "x");
    let crit = column(&text, "criterion");
    let i = xs.iter().position(|&x| (x - 1e4).abs() < 1e-6).unwrap();
    assert!((crit[i] / (3f64.sqrt() * 1e3) - 1.0).abs() < 0.05, "{}", crit[i]);
}

#[test]
fn missing_measure_is_a_config_error_naming_the_key() {
    let (_d, cfg) = setup("[triplet]\ngamma = 1.0\n");
    let o = run(&["curve"], &cfg);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("triplet.measure"));
    assert!(o.stdout.is_empty());
}

#[test]
fn unreadable_config_exits_2() {
    let o = run(&["curve"], Path::new("/nonexistent/run.toml"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn classify_reports() {
    let (_d, cfg) = setup(DRIFT);
    let v: serde_json::Value = serde_json::from_str(&stdout(&run(&["classify"], &cfg))).unwrap();
    assert_eq!(v["verdict"], "DriftsToPlusInfinity");
    for key in ["verdict", "branch", "grid", "mc_evidence"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let (_d, cfg) = setup(
        "[triplet]\ngamma = 1.0\nmeasure = { kind = \"atoms\", atoms = [[-2.0, 1.0]] }\n[params]\nx_geometric = { from = 1.0, to = 1e4, points = 9 }\n",
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&run(&["classify"], &cfg))).unwrap();
    assert_eq!(v["branch"], "finite-mean");
    assert_eq!(v["verdict"], "DoesNotDriftToPlusInfinity");
    let (_d, cfg) = setup(SYMMETRIC);
    let v: serde_json::Value = serde_json::from_str(&stdout(&run(&["classify"], &cfg))).unwrap();
    assert_eq!(v["verdict"], "DoesNotDriftToPlusInfinity");
}

#[test]
fn classify_with_sim_adds_evidence() {
    let body = format!("{DRIFT}t_list = [10.0, 100.0]\nr_list = [10.0]\n[sim]\nseed = 3\nreplications = 500\n");
    let (_d, cfg) = setup(&body);
    let v: serde_json::Value = serde_json::from_str(&stdout(&run(&["classify"], &cfg))).unwrap();
    assert_eq!(v["mc_evidence"]["positivity"].as_array().unwrap().len(), 2);
    assert_eq!(v["mc_evidence"]["exit"].as_array().unwrap().len(), 1);
}

#[test]
fn simulate_writes_files_and_checks() {
    let body = r#"
[triplet]
gamma = 0.1
measure = { kind = "power", plus = { c = 1.0, alpha = 1.2 }, minus = { c = 1.0, alpha = 1.2 } }

[sim]
seed = 8
time = 2.0
inner_cutoff = 0.05
replications = 50

[params]
levels = [1.0, 0.5, 0.25]
"#;
    let (d, cfg) = setup(body);
    let out = d.path().join("out");
    let o = run(&["simulate", "--out", out.to_str().unwrap()], &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let read = |n: &str| std::fs::read_to_string(out.join(n)).unwrap();
    assert!(read("path.csv").starts_with("t,x\n"));
    assert!(read("envelopes.csv").starts_with("t,level,upper,lower\n"));
    assert!(read("skeleton.csv").starts_with("n,tau,jump,s_hat,"));
    let s: serde_json::Value = serde_json::from_str(&read("summary.json")).unwrap();
    assert_eq!(s["containment"]["ok"], true);
    assert_eq!(s["envelopes"]["nested"], true);
    assert_eq!(s["envelopes"]["gaps_nonincreasing"], true);
    let levels: Vec<u32> = read("envelopes.csv").lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(levels.iter().max(), Some(&3));
}

#[test]
fn horizon_exceeded_is_reported_not_fatal() {
    let body = format!("{BROWNIAN}replications = 5\ntime_cap = 0.01\n[params]\nr_list = [1000.0]\n");
    let (d, cfg) = setup(&body);
    let out = d.path().join("out");
    let o = run(&["simulate", "--out", out.to_str().unwrap()], &cfg);
    assert_eq!(o.status.code(), Some(0));
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["exit"][0]["status"], "horizon_exceeded");
}

#[test]
fn exit_prob_with_every_run_capped_is_numeric_failure() {
    let body = format!("{BROWNIAN}replications = 20\ntime_cap = 0.01\n[params]\nr_list = [1000.0]\n");
    let (_d, cfg) = setup(&body);
    assert_eq!(run(&["exit-prob"], &cfg).status.code(), Some(3));
}

#[test]
fn verify_exit_codes() {
    let (_d, cfg) = setup(&format!("{BROWNIAN}replications = 10000\n[params]\nsuite = \"wienerhopf\"\n"));
    let o = run(&["verify"], &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let (_d, cfg) = setup(&format!("{BROWNIAN}replications = 10\n[params]\nsuite = \"thm11\"\n"));
    let o = run(&["verify"], &cfg);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("vacuous"));

    // a coarse grid biases the supremum far beyond its standard error
    let coarse = BROWNIAN.replace("steps = 5", "steps = 5\ngrid_step = 0.5\nsmall_mode = \"grid\"");
    let (_d, cfg) = setup(&format!("{coarse}replications = 10000\n[params]\nsuite = \"wienerhopf\"\n"));
    assert_eq!(run(&["verify"], &cfg).status.code(), Some(1));

    let no_brownian = BROWNIAN.replace("sigma2 = 1.0", "sigma2 = 0.0");
    let (_d, cfg) = setup(&format!("{no_brownian}replications = 1000\n[params]\nsuite = \"wienerhopf\"\n"));
    assert_eq!(run(&["verify"], &cfg).status.code(), Some(2));
}

#[test]
fn seed_override_changes_output_and_repeats_exactly() {
    let body = format!("{BROWNIAN}replications = 200\n[params]\nr_list = [2.0, 4.0]\n");
    let (_d, cfg) = setup(&body);
    let a = stdout(&run(&["exit-prob", "--seed", "5"], &cfg));
    let b = stdout(&run(&["exit-prob", "--seed", "5"], &cfg));
    let c = stdout(&run(&["exit-prob", "--seed", "6"], &cfg));
    assert_eq!(a, b);
    assert_ne!(a, c);
}
