//! Random scenarios, parameter sweeps and their tabulated metrics.
//!
//! Every sweep is a pure function of its scenarios and configuration.
//! Scenarios are processed as independent jobs and the rows come back in
//! scenario order, so parallel and sequential runs produce identical tables.

mod audit;
mod generate;
mod metrics;
mod profile;
mod sweep;

pub use audit::{bound_audit, BoundAudit};
pub use generate::{generate_scenario, ScenarioSpec};
pub use metrics::{find_condition, read_csv, summarize, write_csv, ConditionSummary, MeanStderr, MetricsRow};
pub use profile::{runtime_profile, ProfileConfig, ProfileRow, ProfileSummary};
pub use sweep::{
    budget_sweep, cipp_label, generate_all, lambda_sweep, BudgetSweepConfig, LambdaSweepConfig, GREEDY_DISTANCE,
    GREEDY_ENERGY, LIPP,
};

/// `count` specs cloned from `template` with seeds `first_seed..` and vertex
/// counts cycling through `sizes`.
pub fn spec_family(template: &ScenarioSpec, sizes: &[usize], first_seed: u64, count: usize) -> Vec<ScenarioSpec> {
    (0..count)
        .map(|i| ScenarioSpec {
            n: sizes[i % sizes.len()],
            seed: first_seed + i as u64,
            ..*template
        })
        .collect()
}

#[cfg(test)]
mod tests;
