use super::*;
use crate::exec::Execution;

fn small_specs(count: usize) -> Vec<ScenarioSpec> {
    let template = ScenarioSpec {
        test_point_count: 3,
        ..ScenarioSpec::default()
    };
    spec_family(&template, &[5, 6, 7], 100, count)
}

fn quick_lambda_config(execution: Execution) -> LambdaSweepConfig {
    LambdaSweepConfig {
        lambdas: vec![0.0, 0.5, 1.0],
        s_max: 2,
        execution,
        ..LambdaSweepConfig::default()
    }
}

#[test]
fn same_seed_same_scenario_bytes() {
    let spec = ScenarioSpec::default().with_seed(42);
    let a = generate_scenario(&spec).unwrap().to_json().unwrap();
    let b = generate_scenario(&spec).unwrap().to_json().unwrap();
    assert_eq!(a, b);
    let c = generate_scenario(&spec.with_seed(43)).unwrap().to_json().unwrap();
    assert_ne!(a, c);
}

#[test]
fn generated_scenario_survives_json() {
    let sc = generate_scenario(&ScenarioSpec::default().with_seed(7)).unwrap();
    let back = crate::scenario::Scenario::from_json(&sc.to_json().unwrap()).unwrap();
    assert_eq!(back.to_json().unwrap(), sc.to_json().unwrap());
}

#[test]
fn full_density_gives_the_complete_digraph() {
    let spec = ScenarioSpec {
        n: 6,
        density: 1.0,
        height_amplitude: 0.0,
        ..ScenarioSpec::default()
    };
    let sc = generate_scenario(&spec).unwrap();
    assert_eq!(sc.world.edges().len(), 6 * 5);
    assert_eq!(sc.metadata["repaired_edges"], 0);
}

#[test]
fn sparse_graphs_have_the_expected_edge_count() {
    // n (n - 1) p = 90 * 0.15 = 13.5 sampled edges on average
    let counts: Vec<f64> = (0..400)
        .map(|seed| {
            let spec = ScenarioSpec {
                n: 10,
                density: 0.15,
                height_amplitude: 0.0,
                seed,
                ..ScenarioSpec::default()
            };
            let sc = generate_scenario(&spec).unwrap();
            sc.metadata["initial_edge_count"].as_f64().unwrap()
        })
        .collect();
    let stats = MeanStderr::of(&counts).unwrap();
    assert!((stats.mean - 13.5).abs() < 4.0 * stats.stderr, "{stats:?}");
}

#[test]
fn generated_targets_are_reachable_and_far_apart() {
    for seed in 0..30 {
        let spec = ScenarioSpec {
            n: 7,
            density: 0.1,
            seed,
            ..ScenarioSpec::default()
        };
        let sc = generate_scenario(&spec).unwrap();
        let w = &sc.world;
        assert!(w.shortest_route(w.start(), w.target(), &vec![false; w.n()]).is_some());
        let far = w.positions()[w.start()].distance(&w.positions()[w.target()]);
        for a in w.positions() {
            for b in w.positions() {
                assert!(a.distance(&b) <= far + 1e-12);
            }
        }
    }
}

#[test]
fn bad_specs_are_rejected() {
    let base = ScenarioSpec::default();
    for spec in [
        ScenarioSpec { n: 2, ..base },
        ScenarioSpec { density: 0.0, ..base },
        ScenarioSpec { density: 1.5, ..base },
        ScenarioSpec {
            test_point_count: 0,
            ..base
        },
        ScenarioSpec {
            lengthscale: -1.0,
            ..base
        },
    ] {
        assert!(generate_scenario(&spec).is_err());
    }
}

#[test]
fn spec_family_cycles_sizes() {
    let specs = spec_family(&ScenarioSpec::default(), &[4, 9], 10, 5);
    let got: Vec<(usize, u64)> = specs.iter().map(|s| (s.n, s.seed)).collect();
    assert_eq!(got, vec![(4, 10), (9, 11), (4, 12), (9, 13), (4, 14)]);
}

#[test]
fn lambda_sweep_layout_and_determinism() {
    let scenarios = generate_all(&small_specs(4), Execution::Parallel).unwrap();
    let par = lambda_sweep(&scenarios, &quick_lambda_config(Execution::Parallel)).unwrap();
    let seq = lambda_sweep(&scenarios, &quick_lambda_config(Execution::Sequential)).unwrap();
    assert_eq!(par, seq);
    // per scenario and lambda: lipp, cipp_s1, cipp_s2, greedy_e, greedy_d
    assert_eq!(par.len(), 4 * 3 * 5);
    let methods: Vec<&str> = par[..5].iter().map(|r| r.method.as_str()).collect();
    assert_eq!(
        methods,
        vec![LIPP, "cipp_s1", "cipp_s2", GREEDY_ENERGY, GREEDY_DISTANCE]
    );
    assert!(par.iter().all(|r| r.wall_time_s.is_none()));
}

#[test]
fn lambda_sweep_rows_are_consistent() {
    let scenarios = generate_all(&small_specs(6), Execution::Parallel).unwrap();
    let rows = lambda_sweep(&scenarios, &quick_lambda_config(Execution::Parallel)).unwrap();
    for r in rows.iter().filter(|r| r.is_feasible()) {
        let reduction = r.prior_variance - r.objective.unwrap();
        assert!((r.variance_reduction.unwrap() - reduction).abs() < 1e-12);
        if r.method == LIPP || r.method == GREEDY_ENERGY {
            assert!(r.energy.unwrap() <= r.budget + 1e-9);
        } else {
            assert!(r.distance.unwrap() <= r.budget + 1e-9);
        }
    }
    // distance-budget plans do not depend on lambda, only their energy does
    for seed in scenarios.iter().map(|s| s.seed.unwrap()) {
        let cipp: Vec<&MetricsRow> = rows
            .iter()
            .filter(|r| r.seed == seed && r.method == "cipp_s2")
            .collect();
        assert!(cipp.windows(2).all(|w| w[0].objective == w[1].objective));
        if cipp[0].is_feasible() {
            assert!(cipp.windows(2).all(|w| w[0].energy.unwrap() <= w[1].energy.unwrap()));
        }
    }
}

#[test]
fn budget_sweep_layout() {
    let scenarios = generate_all(&small_specs(3), Execution::Parallel).unwrap();
    let config = BudgetSweepConfig {
        s_max: 2,
        ..BudgetSweepConfig::default()
    };
    let rows = budget_sweep(&scenarios, &config).unwrap();
    let mut i = 0;
    while i < rows.len() {
        let reference = &rows[i];
        assert_eq!(reference.method, "cipp_s2");
        assert_eq!(reference.kappa, None);
        if !reference.is_feasible() {
            i += 1;
            continue;
        }
        let b_ref = reference.energy.unwrap();
        for (k, &kappa) in config.kappas.iter().enumerate() {
            let r = &rows[i + 1 + k];
            assert_eq!(r.method, LIPP);
            assert_eq!(r.kappa, Some(kappa));
            assert!((r.budget - kappa * b_ref).abs() < 1e-12);
        }
        // at kappa = 1 the reference plan itself is feasible for the load-aware planner
        assert!(rows[i + 1].objective.unwrap() <= reference.objective.unwrap() + 1e-9);
        i += 1 + config.kappas.len();
    }
    assert!(budget_sweep(
        &scenarios,
        &BudgetSweepConfig {
            kappas: vec![1.5],
            ..config
        }
    )
    .is_err());
}

#[test]
fn csv_round_trip() {
    let scenarios = generate_all(&small_specs(2), Execution::Sequential).unwrap();
    let rows = lambda_sweep(&scenarios, &quick_lambda_config(Execution::Sequential)).unwrap();
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    let back = read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, rows);
}

#[test]
fn mean_and_standard_error() {
    assert!(MeanStderr::of(&[]).is_none());
    let single = MeanStderr::of(&[3.0]).unwrap();
    assert_eq!((single.mean, single.stderr), (3.0, 0.0));
    // sample sd of 1..=4 is sqrt(5/3)
    let s = MeanStderr::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(s.mean, 2.5);
    assert!((s.stderr - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
}

#[test]
fn summary_groups_in_order_of_appearance() {
    let scenarios = generate_all(&small_specs(3), Execution::Parallel).unwrap();
    let rows = lambda_sweep(&scenarios, &quick_lambda_config(Execution::Parallel)).unwrap();
    let summary = summarize(&rows);
    assert_eq!(summary.len(), 3 * 5);
    assert_eq!(summary[0].method, LIPP);
    assert_eq!(summary[0].lambda, 0.0);
    assert!(summary.iter().all(|c| c.rows == 3));
    let c = find_condition(&summary, "cipp_s1", 0.5, None).unwrap();
    let energies: Vec<f64> = rows
        .iter()
        .filter(|r| r.method == "cipp_s1" && r.lambda == 0.5)
        .filter_map(|r| r.energy)
        .collect();
    assert_eq!(c.energy, MeanStderr::of(&energies));
    assert!(find_condition(&summary, LIPP, 0.3, None).is_none());
}

#[test]
fn weightless_bound_is_s_max() {
    let scenarios = generate_all(&small_specs(5), Execution::Parallel).unwrap();
    let config = LambdaSweepConfig {
        lambdas: vec![0.0],
        include_greedy: false,
        ..LambdaSweepConfig::default()
    };
    let rows = lambda_sweep(&scenarios, &config).unwrap();
    let audit = bound_audit(&rows, config.s_max);
    assert!(audit.rows_audited > 0);
    assert_eq!(audit.lambda_zero_rows, audit.rows_audited);
    assert_eq!(audit.lambda_zero_mismatches, 0);
    assert!(audit.clean(), "{audit:?}");
}

#[test]
fn audit_counts_a_planted_violation() {
    let scenarios = generate_all(&small_specs(2), Execution::Sequential).unwrap();
    let mut rows = lambda_sweep(&scenarios, &quick_lambda_config(Execution::Sequential)).unwrap();
    let before = bound_audit(&rows, 2);
    let victim = rows
        .iter_mut()
        .find(|r| r.bound_premises == Some(true) && r.lambda > 0.0)
        .expect("some row satisfies the premises");
    victim.bound_ratio = Some(victim.bound_value.unwrap() * 2.0);
    victim.bound_exceeded = Some(true);
    victim.bound_violation = Some(true);
    let after = bound_audit(&rows, 2);
    assert_eq!(after.violations, before.violations + 1);
    assert!(!after.clean());
    assert!(after.max_quotient.unwrap() >= 2.0);
}

#[test]
fn profile_runs_every_instance() {
    let mut spec = ScenarioSpec {
        density: 1.0,
        test_point_count: 2,
        ..ScenarioSpec::default()
    };
    spec.energy.s_max = 2;
    let config = ProfileConfig {
        sizes: vec![4],
        seeds_per_size: 3,
        spec,
        ..ProfileConfig::default()
    };
    let (rows, summary) = runtime_profile(&config).unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(summary.len(), 2);
    for s in &summary {
        assert_eq!(s.instances, 3);
        assert!(s.median_wall_time_s <= s.max_wall_time_s);
    }
    assert!(rows.iter().all(|r| r.seed >= 4000 && r.seed < 4003));
    assert!(runtime_profile(&ProfileConfig {
        sizes: vec![],
        ..config
    })
    .is_err());
}
