use levy_bounds::verify::run_suite;
use levy_bounds::{RunConfig, Suite};

fn config(body: &str) -> RunConfig {
    RunConfig::from_toml_str(body).unwrap()
}

const BROWNIAN: &str = r#"
[triplet]
gamma = 0.5
sigma2 = 1.0
measure = { kind = "atoms", atoms = [[1.5, 1.0], [-2.5, 1.0]] }

[sim]
seed = 21
steps = 5
workers = 4
"#;

#[test]
fn wiener_hopf_suite_passes_on_brownian_fixture() {
    let c = config(&format!("{BROWNIAN}replications = 10000\n"));
    let r = run_suite(&c, Suite::Wienerhopf).unwrap();
    assert_eq!(r.tests.len(), 4);
    assert!(!r.failed(), "{r:#?}");
}

#[test]
fn walk_law_suite_with_ten_replications_is_vacuous() {
    let c = config(&format!("{BROWNIAN}replications = 10\n"));
    let r = run_suite(&c, Suite::Thm11).unwrap();
    assert!(!r.failed());
    assert!(r.tests.iter().all(|t| t.vacuous));
}

#[test]
fn walk_law_suite_passes_at_full_size() {
    let c = config(&format!("{BROWNIAN}replications = 10000\n"));
    let r = run_suite(&c, Suite::Thm11).unwrap();
    assert!(!r.failed(), "{r:#?}");
    assert!(r.tests.iter().all(|t| !t.vacuous));
}

#[test]
fn scaling_ratio_matches_jump_rate() {
    let c = config(
        r#"
[triplet]
gamma = 0.0
measure = { kind = "atoms", atoms = [[2.0, 2.0]] }

[sim]
seed = 5
replications = 1000
workers = 4
"#,
    );
    let r = run_suite(&c, Suite::Prop12).unwrap();
    assert!(!r.failed(), "{r:#?}");
    assert!(r.notes.iter().any(|n| n.contains("1/Delta^alpha")));
}

#[test]
fn identity_and_sandwich_suites_pass() {
    let c = config(&format!("{BROWNIAN}replications = 2000\n"));
    for suite in [Suite::Identity25, Suite::Sandwich] {
        let r = run_suite(&c, suite).unwrap();
        assert!(!r.failed(), "{r:#?}");
    }
}
