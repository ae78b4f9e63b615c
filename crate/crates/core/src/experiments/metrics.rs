use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::solver::{DistanceBound, SolveReport};
use crate::world::Plan;

/// One solved (scenario, method, parameter) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub seed: u64,
    pub n: usize,
    pub method: String,
    pub lambda: f64,
    /// Energy budget for load-aware methods, distance budget otherwise.
    pub budget: f64,
    pub kappa: Option<f64>,
    pub status: String,
    pub objective: Option<f64>,
    pub prior_variance: f64,
    pub variance_reduction: Option<f64>,
    pub energy: Option<f64>,
    pub distance: Option<f64>,
    pub efficiency: Option<f64>,
    pub path_len: Option<usize>,
    pub total_samples: Option<u32>,
    pub nodes: u64,
    /// Path length of the distance-budget plan the bound compares against.
    pub reference_path_len: Option<usize>,
    pub bound_ratio: Option<f64>,
    pub bound_value: Option<f64>,
    pub bound_premises: Option<bool>,
    /// Ratio above the bound, premises or not.
    pub bound_exceeded: Option<bool>,
    pub bound_violation: Option<bool>,
    /// Only filled when timing is requested, so tables stay reproducible.
    pub wall_time_s: Option<f64>,
}

impl MetricsRow {
    /// Row for `plan` (if any). `energy` overrides the plan's stored energy,
    /// for methods whose energy is evaluated after the fact.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        seed: u64,
        n: usize,
        method: &str,
        lambda: f64,
        budget: f64,
        prior_variance: f64,
        report: &SolveReport,
        energy: Option<f64>,
        timing: bool,
    ) -> Self {
        let plan = report.plan.as_ref();
        let energy = energy.or(plan.map(|p| p.energy));
        let reduction = plan.map(|p| prior_variance - p.objective);
        let efficiency = match (reduction, energy) {
            (Some(r), Some(e)) if e > 0.0 => Some(r / e),
            _ => None,
        };
        Self {
            seed,
            n,
            method: method.to_string(),
            lambda,
            budget,
            kappa: None,
            status: report.status.as_str().to_string(),
            objective: plan.map(|p| p.objective),
            prior_variance,
            variance_reduction: reduction,
            energy,
            distance: plan.map(|p| p.distance),
            efficiency,
            path_len: plan.map(Plan::len),
            total_samples: plan.map(Plan::total_samples),
            nodes: report.nodes_explored,
            reference_path_len: None,
            bound_ratio: None,
            bound_value: None,
            bound_premises: None,
            bound_exceeded: None,
            bound_violation: None,
            wall_time_s: timing.then_some(report.wall_time_s),
        }
    }

    pub fn with_bound(mut self, bound: &DistanceBound, reference_len: usize) -> Self {
        self.reference_path_len = Some(reference_len);
        self.bound_ratio = Some(bound.ratio);
        self.bound_value = Some(bound.bound);
        self.bound_premises = Some(bound.assumptions_hold);
        self.bound_exceeded = Some(bound.exceeded);
        self.bound_violation = Some(bound.violation);
        self
    }

    pub fn is_feasible(&self) -> bool {
        self.objective.is_some()
    }
}

pub fn write_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<MetricsRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStderr {
    pub mean: f64,
    /// Standard error of the mean; zero for a single observation.
    pub stderr: f64,
    pub count: usize,
}

impl MeanStderr {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() > 1 {
            let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Some(Self {
            mean,
            stderr,
            count: values.len(),
        })
    }
}

/// Aggregates over every row sharing a method, lambda and kappa.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub method: String,
    pub lambda: f64,
    pub kappa: Option<f64>,
    pub rows: usize,
    pub feasible: usize,
    pub objective: Option<MeanStderr>,
    pub variance_reduction: Option<MeanStderr>,
    pub energy: Option<MeanStderr>,
    pub distance: Option<MeanStderr>,
    pub efficiency: Option<MeanStderr>,
}

/// Conditions in order of first appearance.
pub fn summarize(rows: &[MetricsRow]) -> Vec<ConditionSummary> {
    let mut keys: Vec<(String, f64, Option<f64>)> = Vec::new();
    for r in rows {
        let key = (r.method.clone(), r.lambda, r.kappa);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(method, lambda, kappa)| {
            let group: Vec<&MetricsRow> = rows
                .iter()
                .filter(|r| r.method == method && r.lambda == lambda && r.kappa == kappa)
                .collect();
            let stat = |f: fn(&MetricsRow) -> Option<f64>| {
                let values: Vec<f64> = group.iter().filter_map(|r| f(r)).collect();
                MeanStderr::of(&values)
            };
            ConditionSummary {
                rows: group.len(),
                feasible: group.iter().filter(|r| r.is_feasible()).count(),
                objective: stat(|r| r.objective),
                variance_reduction: stat(|r| r.variance_reduction),
                energy: stat(|r| r.energy),
                distance: stat(|r| r.distance),
                efficiency: stat(|r| r.efficiency),
                method,
                lambda,
                kappa,
            }
        })
        .collect()
}

pub fn find_condition<'a>(
    summary: &'a [ConditionSummary],
    method: &str,
    lambda: f64,
    kappa: Option<f64>,
) -> Option<&'a ConditionSummary> {
    summary
        .iter()
        .find(|c| c.method == method && c.lambda == lambda && c.kappa == kappa)
}
