use std::collections::BTreeMap;

use nalgebra::SymmetricEigen;

use super::*;
use crate::experiments::{generate_scenario, ScenarioSpec};
use crate::gp::{FieldModel, Kernel, Point};
use crate::solver::{enumerate_bruteforce, solve_exact, VisitPolicy, DEFAULT_MAX_VERTICES};
use crate::world::{EnergyParams, Plan, Step, Vertex, World};

fn params(lambda: f64, s_max: u32, budget: f64) -> EnergyParams {
    EnergyParams {
        lambda,
        base_mass: 1.0,
        s_max,
        l_max: 20.0,
        budget,
        distance_cap: None,
    }
}

/// 0 -> 1 -> 2 with a shortcut 0 -> 2 and a back edge 1 -> 0; small enough
/// to count rows by hand.
fn triangle() -> World {
    let vertices = (0..3)
        .map(|i| Vertex {
            id: i,
            position: Point::new(0.3 * i as f64, 0.1 * (i % 2) as f64),
            height: 0.0,
        })
        .collect();
    let edges = vec![
        crate::world::Edge { u: 0, v: 1, cost: 0.4 },
        crate::world::Edge { u: 0, v: 2, cost: 0.7 },
        crate::world::Edge { u: 1, v: 2, cost: 0.5 },
        crate::world::Edge { u: 1, v: 0, cost: 0.4 },
    ];
    World::new(vertices, edges, 0, 2).unwrap()
}

fn triangle_query(lambda: f64, s_max: u32) -> PlanQuery {
    let world = triangle();
    let kernel = Kernel::squared_exponential(1.0, 0.5).unwrap();
    let field =
        FieldModel::with_identity_weights(kernel, 0.3, vec![Point::new(0.2, 0.0), Point::new(0.5, 0.2)]).unwrap();
    PlanQuery::new(world, field, params(lambda, s_max, 5.0))
}

fn random_query(seed: u64, n: usize) -> PlanQuery {
    let spec = ScenarioSpec {
        n,
        seed,
        density: 0.45,
        test_point_count: 3,
        energy: params(0.6, 2, 2.5),
        ..ScenarioSpec::default()
    };
    let sc = generate_scenario(&spec).unwrap();
    PlanQuery::new(sc.world, sc.field, sc.energy).with_visit_policy(VisitPolicy::SampleEveryVisit)
}

fn plan_for(query: &PlanQuery, steps: Vec<Step>) -> Plan {
    let eval = query.field_eval().unwrap();
    let mut plan = Plan {
        objective: 0.0,
        energy: crate::world::path_energy(&steps, &query.world, &query.energy).unwrap(),
        distance: crate::world::path_distance(&steps, &query.world).unwrap(),
        steps,
    };
    plan.objective = eval.posterior_variance_sampled(&plan.sampled()).unwrap();
    plan
}

#[test]
fn variable_counts_follow_the_index_sets() {
    let query = triangle_query(0.5, 3);
    let model = build_miqp(&query).unwrap();
    let (e, v, s, m) = (4, 3, 3, 2);
    let counts = model.counts();
    assert_eq!(counts.binary, e + v + v * s);
    assert_eq!(counts.integer, 2 * v);
    assert_eq!(counts.continuous, 2 * v + m * v + m * v * s + e);
    assert_eq!(counts.total(), e + v + v * s + v + v + 2 * v + m * v + m * v * s + e);
}

#[test]
fn big_m_constants() {
    let query = triangle_query(0.5, 3);
    let model = build_miqp(&query).unwrap();
    assert_eq!(model.meta.big_m_order, 3.0);
    assert_eq!(model.meta.big_m_load, 20.0 + 0.5 * 3.0);
    assert_eq!(model.meta.max_mass, 21.0);
    assert!(model.meta.a_max > 0.0);
}

#[test]
fn rows_exist_only_where_the_index_sets_say() {
    let query = triangle_query(0.5, 2);
    let model = build_miqp(&query).unwrap();
    // only vertex 1 is neither start nor target
    assert_eq!(model.rows_with_tag(ConstraintTag::FlowConservation).count(), 1);
    assert_eq!(model.rows_with_tag(ConstraintTag::VisitFixed).count(), 2);
    // one hi and one lo row per (test point, inner vertex)
    assert_eq!(model.rows_with_tag(ConstraintTag::EstimatorActivation).count(), 2 * 2);
    assert_eq!(model.rows_with_tag(ConstraintTag::Mtz).count(), 4);
    assert_eq!(model.rows_with_tag(ConstraintTag::LoadPropagation).count(), 4);
    for c in &model.constraints {
        assert!(c.name.starts_with(c.tag.as_str()));
    }
}

#[test]
fn hand_built_path_is_accepted() {
    let query = triangle_query(0.5, 2);
    let model = build_miqp(&query).unwrap();
    let plan = plan_for(&query, vec![Step::new(0, 1), Step::new(1, 2), Step::new(2, 1)]);
    let assignment = build_assignment(&query, &model, &plan).unwrap();
    let report = validate_assignment(&model, &assignment).unwrap();
    assert!(report.all_pass(), "{:?}", report.failures().collect::<Vec<_>>());
    assert!((report.objective - plan.objective).abs() <= 1e-9 * plan.objective);
    assert!((report.linearized_energy - plan.energy).abs() < 1e-9);
    assert_eq!(report.path.as_deref(), Some(plan.steps.as_slice()));
    assert!(report.notes.is_empty());
}

#[test]
fn brute_force_optimum_round_trips() {
    for seed in 0..8 {
        let query = random_query(seed, 5 + seed as usize % 3);
        let Some(plan) = enumerate_bruteforce(&query, DEFAULT_MAX_VERTICES).unwrap().plan else {
            continue;
        };
        let model = build_miqp(&query).unwrap();
        let assignment = build_assignment(&query, &model, &plan).unwrap();
        let report = validate_assignment(&model, &assignment).unwrap();
        assert!(
            report.all_pass(),
            "seed {seed}: {:?}",
            report.failures().collect::<Vec<_>>()
        );
        assert!((report.objective - plan.objective).abs() <= 1e-6 * plan.objective);
    }
}

#[test]
fn pass_through_visit_is_reported() {
    let query = triangle_query(0.5, 2);
    let model = build_miqp(&query).unwrap();
    let plan = plan_for(&query, vec![Step::new(0, 1), Step::new(1, 0), Step::new(2, 1)]);
    let assignment = build_assignment(&query, &model, &plan).unwrap();
    let report = validate_assignment(&model, &assignment).unwrap();
    assert!(!tag_passes(&report, ConstraintTag::SamplingActivation));
    assert_eq!(report.notes.len(), 1);
    assert!(report.notes[0].contains("vertex 1"));
}

#[test]
fn disjoint_cycles_fail_ordering_rows() {
    // s -> t directly, plus a detached cycle 1 <-> 3
    let vertices = (0..4)
        .map(|i| Vertex {
            id: i,
            position: Point::new(i as f64 * 0.2, 0.0),
            height: 0.0,
        })
        .collect();
    let mut edges = Vec::new();
    for (u, v) in [(0, 2), (0, 1), (1, 3), (3, 1), (1, 2), (3, 2)] {
        edges.push(crate::world::Edge { u, v, cost: 0.3 });
    }
    let world = World::new(vertices, edges, 0, 2).unwrap();
    let kernel = Kernel::squared_exponential(1.0, 0.5).unwrap();
    let field = FieldModel::with_identity_weights(kernel, 0.3, vec![Point::new(0.3, 0.0)]).unwrap();
    let query = PlanQuery::new(world, field, params(0.0, 1, 5.0));
    let model = build_miqp(&query).unwrap();
    let plan = plan_for(&query, vec![Step::new(0, 1), Step::new(2, 1)]);
    let mut a = build_assignment(&query, &model, &plan).unwrap();
    for (name, value) in [
        (names::chi(1, 3), 1.0),
        (names::chi(3, 1), 1.0),
        (names::y(1), 1.0),
        (names::y(3), 1.0),
        (names::z(1, 1), 1.0),
        (names::z(3, 1), 1.0),
        (names::count(1), 1.0),
        (names::count(3), 1.0),
        (names::order(1), 1.0),
        (names::order(3), 2.0),
        (names::transport(1, 3), 1.0),
        (names::transport(3, 1), 1.0),
    ] {
        a.set(&model, &name, value).unwrap();
    }
    let report = validate_assignment(&model, &a).unwrap();
    assert!(!tag_passes(&report, ConstraintTag::Mtz));
    // flow balance alone cannot see the detached cycle
    assert!(tag_passes(&report, ConstraintTag::FlowConservation));
}

#[test]
fn zero_transport_on_an_active_edge_fails_the_lower_envelope() {
    let query = triangle_query(0.5, 2);
    let model = build_miqp(&query).unwrap();
    let plan = plan_for(&query, vec![Step::new(0, 2), Step::new(1, 1), Step::new(2, 1)]);
    let mut a = build_assignment(&query, &model, &plan).unwrap();
    a.set(&model, &names::transport(0, 1), 0.0).unwrap();
    let report = validate_assignment(&model, &a).unwrap();
    assert!(!tag_passes(&report, ConstraintTag::McCormickLower));
    assert!(tag_passes(&report, ConstraintTag::McCormickMass));
}

#[test]
fn envelope_pins_the_product() {
    let (r0, r_max) = (1.0, 7.5);
    for k in 0..=50 {
        let r = r0 + (r_max - r0) * k as f64 / 50.0;
        assert_eq!(mccormick_interval(r, 1.0, r_max), (r, r));
        assert_eq!(mccormick_interval(r, 0.0, r_max), (0.0, 0.0));
    }
}

#[test]
fn missing_variable_is_an_input_error() {
    let query = triangle_query(0.5, 2);
    let model = build_miqp(&query).unwrap();
    let plan = plan_for(&query, vec![Step::new(0, 1), Step::new(2, 1)]);
    let a = build_assignment(&query, &model, &plan).unwrap();
    let mut map = a.to_map(&model);
    map.remove(&names::load(1));
    assert!(matches!(
        Assignment::from_map(&model, &map),
        Err(crate::LippError::Input(_))
    ));
    let empty: BTreeMap<String, f64> = BTreeMap::new();
    assert!(Assignment::from_map(&model, &empty).is_err());
}

#[test]
fn objective_is_positive_semidefinite() {
    for seed in 0..4 {
        let model = build_miqp(&random_query(seed, 6)).unwrap();
        let h = model.objective_hessian();
        let scale = h.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let eig = SymmetricEigen::new(h);
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-10 * scale, "seed {seed}: min eigenvalue {min}");
    }
}

#[test]
fn single_level_collapses_to_the_posterior_variance() {
    let query = triangle_query(0.5, 1);
    let model = build_miqp(&query).unwrap();
    assert!(model.var(&names::estimator_level(0, 1, 1)).is_some());
    assert!(model.var(&names::estimator_level(0, 1, 2)).is_none());
    let plan = plan_for(&query, vec![Step::new(0, 1), Step::new(1, 1), Step::new(2, 1)]);
    let a = build_assignment(&query, &model, &plan).unwrap();
    let report = validate_assignment(&model, &a).unwrap();
    assert!(report.all_pass());
    // noise sigma^2 on each sampled vertex, the plain GP posterior
    let eval = query.field_eval().unwrap();
    let direct = eval.posterior_variance_sampled(&[(0, 1), (1, 1), (2, 1)]).unwrap();
    assert!((report.objective - direct).abs() <= 1e-9 * direct);
}

#[test]
fn export_is_deterministic_and_complete() {
    let model = build_miqp(&triangle_query(0.5, 2)).unwrap();
    let first = write_lp(&model);
    let again = write_lp(&build_miqp(&triangle_query(0.5, 2)).unwrap());
    assert_eq!(first, again);
    let binaries = first.split("Binaries").nth(1).unwrap();
    for v in model.variables.iter().filter(|v| v.kind == VarKind::Binary) {
        assert!(binaries.split_whitespace().any(|t| t == v.name), "{}", v.name);
    }
    assert!(first.lines().all(|l| l.len() <= 100 || l.starts_with('\\')));
}

#[test]
fn export_parses_back_to_the_same_model() {
    for query in [triangle_query(0.5, 2), random_query(3, 6)] {
        let model = build_miqp(&query).unwrap();
        let parsed = parse_lp(&write_lp(&model)).unwrap();
        assert_eq!(parsed.variables, model.variables);
        assert_eq!(parsed.constraints.len(), model.constraints.len());
        for (a, b) in parsed.constraints.iter().zip(&model.constraints) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.tag, b.tag);
            assert_eq!(a.sense, b.sense);
            assert_eq!(a.terms, b.terms);
            assert_eq!(a.rhs, b.rhs);
        }
        assert_eq!(parsed.objective, model.objective);
        assert_eq!(parsed.meta, model.meta);
    }
}

#[test]
fn parse_errors_carry_line_numbers() {
    let model = build_miqp(&triangle_query(0.5, 2)).unwrap();
    let text = write_lp(&model).replace("Subject To\n", "Subject To\n bogus_tag.1: 1 y_0 = 1\n");
    match parse_lp(&text) {
        Err(crate::LippError::Parse { line, .. }) => assert!(line > 2),
        other => panic!("expected a parse error, got {other:?}"),
    }
    assert!(parse_lp("Minimize\n obj: 0\nEnd\n").is_err());
}

#[test]
fn assignment_from_the_exact_solver_round_trips() {
    let query = random_query(11, 7);
    let plan = solve_exact(&query).unwrap().plan.unwrap();
    let model = build_miqp(&query).unwrap();
    let a = build_assignment(&query, &model, &plan).unwrap();
    let report = validate_assignment(&model, &a).unwrap();
    assert!(report.all_pass());
    let text = serde_json::to_string(&report).unwrap();
    assert!(text.contains("\"constraint_tag\""));
}
