use serde::{Deserialize, Serialize};

use crate::baselines::{solve_cipp, solve_greedy, CippQuery, GreedyMode, GreedyQuery};
use crate::error::{input_err, Result};
use crate::exec::{map_ordered, Execution};
use crate::scenario::Scenario;
use crate::solver::{distance_bound, solve_exact, PlanQuery, SolveReport};
use crate::world::{path_energy, EnergyParams};

use super::generate::{generate_scenario, ScenarioSpec};
use super::metrics::MetricsRow;

pub const LIPP: &str = "lipp";
pub const GREEDY_ENERGY: &str = "greedy_e";
pub const GREEDY_DISTANCE: &str = "greedy_d";

pub fn cipp_label(samples: u32) -> String {
    format!("cipp_s{samples}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSweepConfig {
    pub lambdas: Vec<f64>,
    /// Energy budget of the load-aware planners.
    pub budget: f64,
    /// Distance budget of the distance-budget planners.
    pub distance_budget: f64,
    pub base_mass: f64,
    pub s_max: u32,
    pub l_max: f64,
    pub optimality_gap: f64,
    pub include_greedy: bool,
    /// Record wall time per row (makes tables non-reproducible).
    pub timing: bool,
    pub execution: Execution,
}

impl Default for LambdaSweepConfig {
    fn default() -> Self {
        Self {
            lambdas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            budget: 2.0,
            distance_budget: 2.0,
            base_mass: 1.0,
            s_max: 3,
            l_max: 100.0,
            optimality_gap: 0.0,
            include_greedy: true,
            timing: false,
            execution: Execution::default(),
        }
    }
}

impl LambdaSweepConfig {
    fn params(&self, lambda: f64, budget: f64) -> EnergyParams {
        EnergyParams {
            lambda,
            base_mass: self.base_mass,
            s_max: self.s_max,
            l_max: self.l_max,
            budget,
            distance_cap: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return input_err("lambda sweep needs at least one lambda");
        }
        for &l in &self.lambdas {
            self.params(l, self.budget).validate()?;
        }
        if !(self.distance_budget.is_finite() && self.distance_budget > 0.0) {
            return input_err("distance budget must be > 0");
        }
        Ok(())
    }
}

/// Scenarios for `specs`, generated in parallel; order follows `specs`.
pub fn generate_all(specs: &[ScenarioSpec], execution: Execution) -> Result<Vec<Scenario>> {
    map_ordered(execution, specs, generate_scenario).into_iter().collect()
}

/// For every scenario: the load-aware planner at each lambda, the
/// distance-budget planner for every uniform count `1..=S_max` (solved once,
/// energy re-evaluated at each lambda), and both greedy variants.
pub fn lambda_sweep(scenarios: &[Scenario], config: &LambdaSweepConfig) -> Result<Vec<MetricsRow>> {
    config.validate()?;
    let per_scenario = map_ordered(config.execution, scenarios, |sc| lambda_rows(sc, config));
    let mut rows = Vec::new();
    for r in per_scenario {
        rows.extend(r?);
    }
    Ok(rows)
}

fn lambda_rows(sc: &Scenario, config: &LambdaSweepConfig) -> Result<Vec<MetricsRow>> {
    let world = &sc.world;
    let seed = sc.seed.unwrap_or(0);
    let n = world.n();
    let prior = sc.field.prior_variance();
    let reference_params = config.params(0.0, config.budget);
    let row = |method: &str, lambda: f64, budget: f64, report: &SolveReport, energy: Option<f64>| {
        MetricsRow::new(seed, n, method, lambda, budget, prior, report, energy, config.timing)
    };
    let energy_at = |report: &SolveReport, lambda: f64| -> Result<Option<f64>> {
        report
            .plan
            .as_ref()
            .map(|p| path_energy(&p.steps, world, &config.params(lambda, config.budget)))
            .transpose()
    };

    let mut cipp = Vec::new();
    for s in 1..=config.s_max {
        let q = CippQuery::new(
            world.clone(),
            sc.field.clone(),
            config.distance_budget,
            s,
            reference_params,
        )
        .with_gap(config.optimality_gap)
        .with_execution(config.execution);
        cipp.push(solve_cipp(&q)?);
    }
    let greedy_d = if config.include_greedy {
        Some(solve_greedy(&GreedyQuery {
            world: world.clone(),
            field: sc.field.clone(),
            energy: reference_params,
            mode: GreedyMode::Distance {
                budget: config.distance_budget,
            },
        })?)
    } else {
        None
    };
    let reference = cipp.last().expect("s_max >= 1");

    let mut rows = Vec::new();
    for &lambda in &config.lambdas {
        let params = config.params(lambda, config.budget);
        let query = PlanQuery::new(world.clone(), sc.field.clone(), params)
            .with_gap(config.optimality_gap)
            .with_execution(config.execution);
        let lipp = solve_exact(&query)?;
        let mut lipp_row = row(LIPP, lambda, config.budget, &lipp, None);
        if let (Some(pe), Some(pd)) = (&lipp.plan, &reference.plan) {
            let mut pd = pd.clone();
            pd.energy = path_energy(&pd.steps, world, &params)?;
            if pd.distance > 0.0 {
                let bound = distance_bound(pe, &pd, &params)?;
                lipp_row = lipp_row.with_bound(&bound, pd.len());
            }
        }
        rows.push(lipp_row);
        for (i, report) in cipp.iter().enumerate() {
            let label = cipp_label(i as u32 + 1);
            rows.push(row(
                &label,
                lambda,
                config.distance_budget,
                report,
                energy_at(report, lambda)?,
            ));
        }
        if config.include_greedy {
            let greedy_e = solve_greedy(&GreedyQuery {
                world: world.clone(),
                field: sc.field.clone(),
                energy: params,
                mode: GreedyMode::Energy,
            })?;
            rows.push(row(GREEDY_ENERGY, lambda, config.budget, &greedy_e, None));
            let gd = greedy_d.as_ref().expect("computed above");
            rows.push(row(
                GREEDY_DISTANCE,
                lambda,
                config.distance_budget,
                gd,
                energy_at(gd, lambda)?,
            ));
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetSweepConfig {
    pub kappas: Vec<f64>,
    /// Distance budget of the reference distance-budget plan.
    pub distance_budget: f64,
    /// Sample mass used to price the reference plan and for the load-aware
    /// planner.
    pub lambda: f64,
    pub base_mass: f64,
    pub s_max: u32,
    pub l_max: f64,
    pub optimality_gap: f64,
    pub timing: bool,
    pub execution: Execution,
}

impl Default for BudgetSweepConfig {
    fn default() -> Self {
        Self {
            kappas: vec![1.0, 0.5, 0.35],
            distance_budget: 2.0,
            lambda: 1.0,
            base_mass: 1.0,
            s_max: 3,
            l_max: 100.0,
            optimality_gap: 0.0,
            timing: false,
            execution: Execution::default(),
        }
    }
}

/// Per scenario: the distance-budget plan with `S_max` samples everywhere,
/// its energy `B_ref` at `lambda`, then the load-aware plan under
/// `kappa * B_ref` for every kappa (no distance cap).
pub fn budget_sweep(scenarios: &[Scenario], config: &BudgetSweepConfig) -> Result<Vec<MetricsRow>> {
    if config.kappas.iter().any(|k| !(*k > 0.0 && *k <= 1.0)) {
        return input_err("every kappa must lie in (0, 1]");
    }
    let per_scenario = map_ordered(config.execution, scenarios, |sc| budget_rows(sc, config));
    let mut rows = Vec::new();
    for r in per_scenario {
        rows.extend(r?);
    }
    Ok(rows)
}

fn budget_rows(sc: &Scenario, config: &BudgetSweepConfig) -> Result<Vec<MetricsRow>> {
    let world = &sc.world;
    let seed = sc.seed.unwrap_or(0);
    let prior = sc.field.prior_variance();
    let params = |budget: f64| EnergyParams {
        lambda: config.lambda,
        base_mass: config.base_mass,
        s_max: config.s_max,
        l_max: config.l_max,
        budget,
        distance_cap: None,
    };
    let q = CippQuery::new(
        world.clone(),
        sc.field.clone(),
        config.distance_budget,
        config.s_max,
        params(1.0),
    )
    .with_gap(config.optimality_gap)
    .with_execution(config.execution);
    let cipp = solve_cipp(&q)?;
    let label = cipp_label(config.s_max);
    let Some(reference) = &cipp.plan else {
        let row = MetricsRow::new(
            seed,
            world.n(),
            &label,
            config.lambda,
            config.distance_budget,
            prior,
            &cipp,
            None,
            config.timing,
        );
        return Ok(vec![row]);
    };
    let b_ref = path_energy(&reference.steps, world, &params(1.0))?;
    let mut rows = vec![MetricsRow::new(
        seed,
        world.n(),
        &label,
        config.lambda,
        config.distance_budget,
        prior,
        &cipp,
        Some(b_ref),
        config.timing,
    )];
    for &kappa in &config.kappas {
        let budget = kappa * b_ref;
        let query = PlanQuery::new(world.clone(), sc.field.clone(), params(budget))
            .with_gap(config.optimality_gap)
            .with_execution(config.execution);
        let lipp = solve_exact(&query)?;
        let mut row = MetricsRow::new(
            seed,
            world.n(),
            LIPP,
            config.lambda,
            budget,
            prior,
            &lipp,
            None,
            config.timing,
        );
        row.kappa = Some(kappa);
        if let Some(pe) = &lipp.plan {
            if reference.distance > 0.0 {
                let mut pd = reference.clone();
                pd.energy = b_ref;
                row = row.with_bound(&distance_bound(pe, &pd, &params(budget))?, pd.len());
            }
        }
        rows.push(row);
    }
    Ok(rows)
}
