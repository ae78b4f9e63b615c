//! Exact load-aware planning.
//!
//! [`solve_exact`] runs a depth-first branch-and-bound over simple s-t paths
//! and per-vertex sample counts. [`enumerate_bruteforce`] is the exhaustive
//! reference it is checked against. The mixed-integer model of the same
//! problem lives in [`crate::miqp`].

mod bound;
mod brute;
mod search;

use serde::{Deserialize, Serialize};

use crate::error::{input_err, Result};
use crate::exec::Execution;
use crate::gp::{FieldEval, FieldModel};
use crate::world::{EnergyParams, Plan, Step, World};

pub use bound::{distance_bound, DistanceBound};
pub use brute::DEFAULT_MAX_VERTICES;
pub(crate) use brute::{brute_force, BruteRules};
pub(crate) use search::{CountRule, SearchSpec, TieRule};

/// Absolute slack allowed on every budget comparison.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Whether a vertex on the path may be traversed without sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VisitPolicy {
    /// Visited vertices may take zero samples.
    #[default]
    PassThrough,
    /// Every visited vertex, start and target included, takes at least one
    /// sample. This is the feasible set of the mixed-integer model.
    SampleEveryVisit,
}

impl VisitPolicy {
    pub(crate) fn min_count(self) -> u32 {
        match self {
            VisitPolicy::PassThrough => 0,
            VisitPolicy::SampleEveryVisit => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlanQuery {
    pub world: World,
    pub field: FieldModel,
    pub energy: EnergyParams,
    /// Relative optimality gap; `0.05` stops once the incumbent is provably
    /// within 5% of the optimum.
    pub optimality_gap: f64,
    pub node_limit: Option<u64>,
    pub visit_policy: VisitPolicy,
    pub execution: Execution,
}

impl PlanQuery {
    pub fn new(world: World, field: FieldModel, energy: EnergyParams) -> Self {
        Self {
            world,
            field,
            energy,
            optimality_gap: 0.0,
            node_limit: None,
            visit_policy: VisitPolicy::default(),
            execution: Execution::default(),
        }
    }

    pub fn with_gap(mut self, gap: f64) -> Self {
        self.optimality_gap = gap;
        self
    }

    pub fn with_node_limit(mut self, limit: u64) -> Self {
        self.node_limit = Some(limit);
        self
    }

    pub fn with_visit_policy(mut self, policy: VisitPolicy) -> Self {
        self.visit_policy = policy;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.energy.validate()?;
        self.field.validate()?;
        if !(self.optimality_gap >= 0.0 && self.optimality_gap < 1.0) {
            return input_err(format!(
                "optimality gap must lie in [0, 1), got {}",
                self.optimality_gap
            ));
        }
        if self.world.n() > search::MAX_SEARCH_VERTICES {
            return input_err(format!(
                "exact search supports at most {} vertices",
                search::MAX_SEARCH_VERTICES
            ));
        }
        Ok(())
    }

    pub(crate) fn field_eval(&self) -> Result<FieldEval> {
        FieldEval::new(&self.field, &self.world.positions())
    }

    pub(crate) fn search_spec<'a>(&'a self, eval: &'a FieldEval) -> SearchSpec<'a> {
        SearchSpec {
            world: &self.world,
            eval,
            counts: CountRule::Free {
                min: self.visit_policy.min_count(),
                max: self.energy.s_max,
            },
            lambda: self.energy.lambda,
            base_mass: self.energy.base_mass,
            load_cap: Some(self.energy.l_max),
            energy_budget: Some(self.energy.budget),
            distance_budget: self.energy.distance_cap,
            tie: TieRule::EnergyFirst,
            gap: self.optimality_gap,
            node_limit: self.node_limit,
            execution: self.execution,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    GapReached,
    NodeLimit,
    Infeasible,
    /// Produced by a heuristic; no optimality claim.
    Heuristic,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::GapReached => "gap-reached",
            SolveStatus::NodeLimit => "node-limit",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Heuristic => "heuristic",
        }
    }

    pub fn has_plan_guarantee(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::GapReached)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub plan: Option<Plan>,
    /// Proven lower bound on the optimal objective; absent when infeasible.
    pub lower_bound: Option<f64>,
    pub nodes_explored: u64,
    pub wall_time_s: f64,
    pub status: SolveStatus,
}

impl SolveReport {
    pub fn objective(&self) -> Option<f64> {
        self.plan.as_ref().map(|p| p.objective)
    }
}

/// Minimum posterior variance plan over simple s-t paths and sample
/// allocations within the energy budget, load capacity and optional
/// distance cap.
pub fn solve_exact(query: &PlanQuery) -> Result<SolveReport> {
    query.validate()?;
    let eval = query.field_eval()?;
    query.search_spec(&eval).run()
}

/// Exhaustive enumeration of every simple s-t path and every allocation on
/// it. Refuses worlds larger than `max_vertices`.
pub fn enumerate_bruteforce(query: &PlanQuery, max_vertices: usize) -> Result<SolveReport> {
    query.validate()?;
    if query.world.n() > max_vertices {
        return input_err(format!(
            "brute force limited to {max_vertices} vertices, world has {}",
            query.world.n()
        ));
    }
    let eval = query.field_eval()?;
    let rules = BruteRules {
        min_count: query.visit_policy.min_count(),
        max_count: query.energy.s_max,
        energy: query.energy,
        enforce_energy: true,
        enforce_load: true,
        distance_budget: query.energy.distance_cap,
    };
    brute_force(&query.world, &eval, &rules)
}

/// Posterior variance with every vertex still reachable from the end of
/// `prefix` sampled at the most it could feasibly take. No completion of the
/// prefix can do better.
pub fn variance_lower_bound(query: &PlanQuery, prefix: &[Step]) -> Result<f64> {
    query.validate()?;
    let eval = query.field_eval()?;
    query.search_spec(&eval).prefix_bound(prefix)
}

#[cfg(test)]
mod tests;
