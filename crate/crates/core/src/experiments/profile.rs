use serde::{Deserialize, Serialize};

use crate::baselines::{solve_cipp, CippQuery};
use crate::error::{input_err, Result};
use crate::exec::Execution;
use crate::solver::{solve_exact, PlanQuery};

use super::generate::{generate_scenario, ScenarioSpec};
use super::sweep::{cipp_label, LIPP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub sizes: Vec<usize>,
    pub seeds_per_size: u64,
    /// Template for every instance; `n` and `seed` are overwritten.
    pub spec: ScenarioSpec,
    pub distance_budget: f64,
    pub optimality_gap: f64,
    pub execution: Execution,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        let mut spec = ScenarioSpec {
            density: 0.15,
            ..ScenarioSpec::default()
        };
        spec.energy.lambda = 1.0;
        Self {
            sizes: vec![4, 6, 8, 10],
            seeds_per_size: 5,
            spec,
            distance_budget: 2.0,
            optimality_gap: 0.05,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub n: usize,
    pub seed: u64,
    pub method: String,
    pub status: String,
    pub nodes: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub n: usize,
    pub method: String,
    pub median_wall_time_s: f64,
    pub max_wall_time_s: f64,
    pub instances: usize,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        (values[k / 2 - 1] + values[k / 2]) / 2.0
    }
}

/// Times the load-aware planner and the `S_max` distance-budget planner on
/// `seeds_per_size` instances per size. Instances run one after another so
/// timings do not compete with each other.
pub fn runtime_profile(config: &ProfileConfig) -> Result<(Vec<ProfileRow>, Vec<ProfileSummary>)> {
    if config.sizes.is_empty() || config.seeds_per_size == 0 {
        return input_err("profile needs at least one size and one seed");
    }
    let mut sizes = config.sizes.clone();
    sizes.sort_unstable();
    let cipp = cipp_label(config.spec.energy.s_max);
    let mut rows = Vec::new();
    for &n in &sizes {
        for k in 0..config.seeds_per_size {
            let spec = ScenarioSpec {
                n,
                seed: (n as u64) * 1_000 + k,
                ..config.spec
            };
            let sc = generate_scenario(&spec)?;
            let query = PlanQuery::new(sc.world.clone(), sc.field.clone(), sc.energy)
                .with_gap(config.optimality_gap)
                .with_execution(config.execution);
            let lipp = solve_exact(&query)?;
            let q = CippQuery::new(sc.world, sc.field, config.distance_budget, sc.energy.s_max, sc.energy)
                .with_gap(config.optimality_gap)
                .with_execution(config.execution);
            let c = solve_cipp(&q)?;
            for (method, report) in [(LIPP.to_string(), lipp), (cipp.clone(), c)] {
                rows.push(ProfileRow {
                    n,
                    seed: spec.seed,
                    method,
                    status: report.status.as_str().into(),
                    nodes: report.nodes_explored,
                    wall_time_s: report.wall_time_s,
                });
            }
        }
    }
    let mut summary = Vec::new();
    for &n in &sizes {
        for method in [LIPP.to_string(), cipp.clone()] {
            let mut times: Vec<f64> = rows
                .iter()
                .filter(|r| r.n == n && r.method == method)
                .map(|r| r.wall_time_s)
                .collect();
            let max = times.iter().copied().fold(0.0, f64::max);
            summary.push(ProfileSummary {
                n,
                instances: times.len(),
                median_wall_time_s: median(&mut times),
                max_wall_time_s: max,
                method,
            });
        }
    }
    Ok((rows, summary))
}
