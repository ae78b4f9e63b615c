use lipp::experiments::{generate_scenario, ScenarioSpec};
use lipp::miqp::{build_miqp, export_model, parse_lp};
use lipp::{PlanQuery, Scenario};

#[test]
fn scenario_save_and_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.json");
    let sc = generate_scenario(&ScenarioSpec::default().with_seed(5)).unwrap();
    sc.save(&path).unwrap();
    let back = Scenario::load(&path).unwrap();
    assert_eq!(back.to_json().unwrap(), sc.to_json().unwrap());
    assert!(std::fs::read_to_string(&path).unwrap().ends_with("}\n"));
    assert!(Scenario::load(dir.path().join("missing.json")).is_err());
}

#[test]
fn exported_model_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.lp");
    let spec = ScenarioSpec {
        n: 5,
        test_point_count: 2,
        ..ScenarioSpec::default()
    };
    let sc = generate_scenario(&spec).unwrap();
    let model = build_miqp(&PlanQuery::new(sc.world, sc.field, sc.energy)).unwrap();
    export_model(&model, &path).unwrap();
    let parsed = parse_lp(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(parsed.variables, model.variables);
    assert_eq!(parsed.constraints.len(), model.constraints.len());
}
