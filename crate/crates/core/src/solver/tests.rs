use super::*;
use crate::experiments::{generate_scenario, ScenarioSpec};
use crate::gp::{Kernel, Point};
use crate::world::tests::line_world;

fn unit_field(world: &World) -> FieldModel {
    let kernel = Kernel::squared_exponential(1.0, 1.0).unwrap();
    let points = world.positions();
    FieldModel::with_identity_weights(kernel, 0.5, points).unwrap()
}

fn params(lambda: f64, budget: f64, s_max: u32) -> EnergyParams {
    EnergyParams {
        lambda,
        base_mass: 1.0,
        s_max,
        l_max: 100.0,
        budget,
        distance_cap: None,
    }
}

fn random_query(seed: u64, n: usize, lambda: f64, s_max: u32) -> PlanQuery {
    let mut spec = ScenarioSpec {
        n,
        seed,
        density: 0.5,
        test_point_count: 3,
        ..ScenarioSpec::default()
    };
    spec.energy = params(lambda, 2.0, s_max);
    let sc = generate_scenario(&spec).unwrap();
    PlanQuery::new(sc.world, sc.field, sc.energy)
}

#[test]
fn two_vertices_weightless_samples_everywhere() {
    let world = line_world(&[1.0]);
    let query = PlanQuery::new(world.clone(), unit_field(&world), params(0.0, 1.0, 1));
    let report = solve_exact(&query).unwrap();
    assert_eq!(report.status, SolveStatus::Optimal);
    let plan = report.plan.unwrap();
    assert_eq!(plan.steps, vec![Step::new(0, 1), Step::new(1, 1)]);
    assert_eq!(plan.energy, 1.0);
}

#[test]
fn two_vertices_heavy_samples_only_at_target() {
    // sampling at the start doubles the mass over the only edge: 2 > B = 1
    let world = line_world(&[1.0]);
    let query = PlanQuery::new(world.clone(), unit_field(&world), params(1.0, 1.0, 1));
    let plan = solve_exact(&query).unwrap().plan.unwrap();
    assert_eq!(plan.steps, vec![Step::new(0, 0), Step::new(1, 1)]);
    assert_eq!(plan.energy, 1.0);
}

#[test]
fn budget_below_shortest_path_is_infeasible() {
    let world = line_world(&[1.0, 1.0]);
    let query = PlanQuery::new(world.clone(), unit_field(&world), params(0.0, 1.5, 2));
    let report = solve_exact(&query).unwrap();
    assert_eq!(report.status, SolveStatus::Infeasible);
    assert!(report.plan.is_none());
    assert!(report.lower_bound.is_none());
    let brute = enumerate_bruteforce(&query, DEFAULT_MAX_VERTICES).unwrap();
    assert_eq!(brute.status, SolveStatus::Infeasible);
}

#[test]
fn weightless_optimum_samples_s_max_at_every_visited_vertex() {
    for seed in 0..5 {
        let query = random_query(seed, 6, 0.0, 3);
        let plan = enumerate_bruteforce(&query, DEFAULT_MAX_VERTICES)
            .unwrap()
            .plan
            .unwrap();
        assert!(
            plan.steps.iter().all(|s| s.samples == 3),
            "seed {seed}: {:?}",
            plan.steps
        );
    }
}

#[test]
fn brute_force_refuses_large_worlds() {
    let query = random_query(1, 9, 0.5, 2);
    assert!(matches!(
        enumerate_bruteforce(&query, DEFAULT_MAX_VERTICES),
        Err(crate::LippError::Input(_))
    ));
}

#[test]
fn matches_brute_force_on_random_instances() {
    for seed in 0..24 {
        let n = 4 + (seed as usize % 4);
        let lambda = [0.0, 0.3, 1.0][seed as usize % 3];
        for policy in [VisitPolicy::PassThrough, VisitPolicy::SampleEveryVisit] {
            let query = random_query(seed, n, lambda, 2).with_visit_policy(policy);
            let exact = solve_exact(&query).unwrap();
            let brute = enumerate_bruteforce(&query, DEFAULT_MAX_VERTICES).unwrap();
            assert_eq!(
                exact.status == SolveStatus::Infeasible,
                brute.status == SolveStatus::Infeasible
            );
            if let (Some(a), Some(b)) = (exact.objective(), brute.objective()) {
                assert!((a - b).abs() <= 1e-9, "seed {seed} {policy:?}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn returned_plans_are_feasible_and_above_the_bound() {
    for seed in 0..12 {
        let mut query = random_query(seed, 7, 0.5, 3);
        query.energy.distance_cap = Some(1.8);
        let report = solve_exact(&query).unwrap();
        let Some(plan) = &report.plan else { continue };
        plan.verify(&query.world, &query.energy).unwrap();
        assert!(plan.energy <= query.energy.budget + 1e-9);
        assert!(plan.distance <= 1.8 + 1e-9);
        crate::world::load_profile(&plan.steps, &query.energy).unwrap();
        assert!(plan.objective >= report.lower_bound.unwrap() - 1e-9);
    }
}

#[test]
fn lower_bound_never_exceeds_a_feasible_completion() {
    for seed in 0..10 {
        let query = random_query(seed, 6, 0.4, 2);
        let Some(plan) = enumerate_bruteforce(&query, DEFAULT_MAX_VERTICES).unwrap().plan else {
            continue;
        };
        let mut previous = f64::NEG_INFINITY;
        for k in 1..=plan.steps.len() {
            let bound = variance_lower_bound(&query, &plan.steps[..k]).unwrap();
            assert!(bound <= plan.objective + 1e-12, "seed {seed} prefix {k}");
            // fewer candidate vertices as the prefix grows
            assert!(bound >= previous - 1e-12);
            previous = bound;
        }
        assert!((previous - plan.objective).abs() < 1e-9);
    }
}

#[test]
fn empty_prefix_bound_is_full_sampling_variance() {
    let query = random_query(3, 6, 0.0, 3);
    let eval = query.field_eval().unwrap();
    let bound = variance_lower_bound(&query, &[Step::new(query.world.start(), 3)]).unwrap();
    let optimum = solve_exact(&query).unwrap().objective().unwrap();
    assert!(bound <= optimum + 1e-12);
    let everything: Vec<(usize, u32)> = (0..query.world.n()).map(|v| (v, 3)).collect();
    assert!(eval.posterior_variance_sampled(&everything).unwrap() <= bound + 1e-12);
}

#[test]
fn full_prefix_at_s_max_bounds_exactly() {
    // complete graph on three vertices, path through all of them
    let vertices = (0..3)
        .map(|i| crate::world::Vertex {
            id: i,
            position: Point::new(i as f64 * 0.4, 0.0),
            height: 0.0,
        })
        .collect();
    let mut edges = Vec::new();
    for u in 0..3 {
        for v in 0..3 {
            if u != v {
                edges.push(crate::world::Edge { u, v, cost: 0.4 });
            }
        }
    }
    let world = World::new(vertices, edges, 0, 2).unwrap();
    let query = PlanQuery::new(world.clone(), unit_field(&world), params(0.0, 10.0, 2));
    let steps = [Step::new(0, 2), Step::new(1, 2), Step::new(2, 2)];
    let bound = variance_lower_bound(&query, &steps).unwrap();
    let eval = query.field_eval().unwrap();
    let exact = eval.posterior_variance_sampled(&[(0, 2), (1, 2), (2, 2)]).unwrap();
    assert_eq!(bound, exact);
}

#[test]
fn gap_and_node_limit_statuses() {
    let query = random_query(5, 8, 0.5, 3);
    let optimum = solve_exact(&query).unwrap().objective().unwrap();

    let gapped = solve_exact(&query.clone().with_gap(0.3)).unwrap();
    assert!(gapped.status.has_plan_guarantee());
    let objective = gapped.objective().unwrap();
    assert!(objective * (1.0 - 0.3) <= optimum + 1e-12);
    assert!(gapped.lower_bound.unwrap() <= optimum + 1e-12);

    let limited = solve_exact(&query.clone().with_node_limit(3)).unwrap();
    assert_eq!(limited.status, SolveStatus::NodeLimit);
    assert!(limited.lower_bound.unwrap() <= optimum + 1e-12);
}

#[test]
fn parallel_and_sequential_agree_exactly() {
    for seed in 0..6 {
        let query = random_query(seed, 8, 0.7, 3);
        let par = solve_exact(&query.clone().with_execution(Execution::Parallel)).unwrap();
        let seq = solve_exact(&query.with_execution(Execution::Sequential)).unwrap();
        assert_eq!(par.plan, seq.plan, "seed {seed}");
        assert_eq!(par.status, seq.status);
    }
}

#[test]
fn invalid_gap_is_rejected() {
    let query = random_query(0, 5, 0.5, 2).with_gap(1.0);
    assert!(solve_exact(&query).is_err());
}
