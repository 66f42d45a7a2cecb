use finsler_core::harness::{
    run_scenario, validate_json, Format, Overrides, Scenario, Task, EXIT_CONFIG, EXIT_OK,
};

const FLAT_TORUS: &str = r#"
name = "flat-torus-small"
manifold.periods = ["2pi", "2pi"]
manifold.resolution = 16
metric.family = "riemannian"
"#;

const CIRCLE: &str = r#"
name = "circle-small"
manifold.periods = ["2pi"]
manifold.resolution = 64
metric.family = "randers"
metric.beta = [0.3]
"#;

fn scenario(text: &str, tasks: &[Task]) -> Scenario {
    Overrides { tasks: Some(tasks.to_vec()), ..Default::default() }
        .apply(Scenario::from_toml_str(text).unwrap())
        .unwrap()
}

#[test]
fn task_closure_pulls_in_dependencies() {
    let all = Task::closure(&[Task::Verify]);
    assert_eq!(all, vec![Task::Invariants, Task::Measures, Task::Eigen, Task::Cheeger, Task::Bounds, Task::Verify]);
    assert_eq!(Task::closure(&[Task::Eigen]), vec![Task::Measures, Task::Eigen]);
}

#[test]
fn malformed_configs_are_config_errors() {
    for text in [
        "name = 3",
        "name = \"x\"\nmanifold.periods = [\"2pi\"]\nmanifold.resolution = 64\nmetric.family = \"kite\"",
        "name = \"x\"\nmanifold.periods = [\"two pi\"]\nmanifold.resolution = 64\nmetric.family = \"riemannian\"",
        "name = \"x\"\nmanifold.periods = [\"2pi\"]\nmanifold.resolution = 64\nmetric.family = \"riemannian\"\nbogus = 1",
    ] {
        let err = Scenario::from_toml_str(text).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_CONFIG, "{text}: {err}");
    }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let s = scenario(FLAT_TORUS, &[Task::Coarea, Task::Verify]);
    let a = run_scenario(&s).unwrap().report.to_json().unwrap();
    let b = run_scenario(&s).unwrap().report.to_json().unwrap();
    assert_eq!(a, b);
}

#[test]
fn report_round_trips_through_validation() {
    let outcome = run_scenario(&scenario(FLAT_TORUS, &[Task::Coarea, Task::Verify])).unwrap();
    assert_eq!(outcome.exit_code(), EXIT_OK);
    let text = outcome.report.to_json().unwrap();
    let back = validate_json(&text).unwrap();
    assert_eq!(back, outcome.report);
}

#[test]
fn upper_bound_cheeger_value_is_refused_for_the_lower_eigenvalue_bound() {
    let report = run_scenario(&scenario(FLAT_TORUS, &[Task::Verify])).unwrap().report;
    assert!(report.quantities.h_exact.is_none());
    assert!(report.refusals.iter().any(|r| r.name == "cheeger-eigenvalue-lower"));
    assert!(report.inequalities.iter().all(|r| r.name != "cheeger-eigenvalue-lower"));
}

#[test]
fn one_dimensional_runs_use_the_exact_cheeger_constant() {
    let report = run_scenario(&scenario(CIRCLE, &[Task::Verify])).unwrap().report;
    assert!(report.quantities.h_exact.is_some());
    let rec = report.inequalities.iter().find(|r| r.name == "cheeger-eigenvalue-lower").unwrap();
    assert!(rec.satisfied);
    assert!(report.refusals.iter().all(|r| r.name != "cheeger-eigenvalue-lower"));
    let names: Vec<&str> = report.refusals.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["croke-cheeger-lower", "yau-eigenvalue-lower"]);
    assert!(report.refusals.iter().all(|r| r.reason.contains("dimension")));
}

#[test]
fn outcome_writes_side_files() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_scenario(&scenario(CIRCLE, &[Task::Cheeger])).unwrap();
    let paths = outcome.write(dir.path(), Format::Json).unwrap();
    for suffix in ["eigenfunction.csv", "density.csv", "json", "runtime.json"] {
        assert!(paths.iter().any(|p| p.to_string_lossy().ends_with(suffix)), "missing {suffix}: {paths:?}");
    }
    let eig = std::fs::read_to_string(dir.path().join("circle-small.eigenfunction.csv")).unwrap();
    assert_eq!(eig.lines().count(), 64 + 1);
}
