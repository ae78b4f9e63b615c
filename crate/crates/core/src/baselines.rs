//! Comparison planners: distance-budget planning with uniform sampling
//! (load-unaware) and a myopic greedy heuristic.

use std::time::Instant;

use crate::error::{input_err, Result};
use crate::exec::Execution;
use crate::gp::{FieldEval, FieldModel};
use crate::solver::{
    brute_force, BruteRules, CountRule, SearchSpec, SolveReport, SolveStatus, TieRule, FEASIBILITY_TOL,
};
use crate::world::{path_distance, path_energy, EnergyParams, Plan, Step, World};

/// Distance-budget planning where every visited vertex takes the same
/// number of samples.
#[derive(Debug, Clone)]
pub struct CippQuery {
    pub world: World,
    pub field: FieldModel,
    pub distance_budget: f64,
    pub samples_per_vertex: u32,
    /// Mass model used only to report energy; it never constrains the search.
    pub energy: EnergyParams,
    pub optimality_gap: f64,
    pub node_limit: Option<u64>,
    pub execution: Execution,
}

impl CippQuery {
    pub fn new(
        world: World,
        field: FieldModel,
        distance_budget: f64,
        samples_per_vertex: u32,
        energy: EnergyParams,
    ) -> Self {
        Self {
            world,
            field,
            distance_budget,
            samples_per_vertex,
            energy,
            optimality_gap: 0.0,
            node_limit: None,
            execution: Execution::default(),
        }
    }

    pub fn with_gap(mut self, gap: f64) -> Self {
        self.optimality_gap = gap;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.field.validate()?;
        self.energy.validate()?;
        if !(self.distance_budget.is_finite() && self.distance_budget > 0.0) {
            return input_err(format!("distance budget must be > 0, got {}", self.distance_budget));
        }
        if self.samples_per_vertex < 1 || self.samples_per_vertex > self.energy.s_max {
            return input_err(format!(
                "samples per vertex must lie in [1, {}], got {}",
                self.energy.s_max, self.samples_per_vertex
            ));
        }
        if !(self.optimality_gap >= 0.0 && self.optimality_gap < 1.0) {
            return input_err("optimality gap must lie in [0, 1)");
        }
        Ok(())
    }

    fn spec<'a>(&'a self, eval: &'a FieldEval) -> SearchSpec<'a> {
        SearchSpec {
            world: &self.world,
            eval,
            counts: CountRule::Uniform(self.samples_per_vertex),
            lambda: self.energy.lambda,
            base_mass: self.energy.base_mass,
            load_cap: None,
            energy_budget: None,
            distance_budget: Some(self.distance_budget),
            tie: TieRule::DistanceFirst,
            gap: self.optimality_gap,
            node_limit: self.node_limit,
            execution: self.execution,
        }
    }
}

/// Exact optimum over simple s-t paths within the distance budget.
pub fn solve_cipp(query: &CippQuery) -> Result<SolveReport> {
    query.validate()?;
    let eval = FieldEval::new(&query.field, &query.world.positions())?;
    query.spec(&eval).run()
}

/// Exhaustive reference for [`solve_cipp`].
pub fn enumerate_cipp_bruteforce(query: &CippQuery, max_vertices: usize) -> Result<SolveReport> {
    query.validate()?;
    if query.world.n() > max_vertices {
        return input_err(format!(
            "brute force limited to {max_vertices} vertices, world has {}",
            query.world.n()
        ));
    }
    let eval = FieldEval::new(&query.field, &query.world.positions())?;
    let rules = BruteRules {
        min_count: query.samples_per_vertex,
        max_count: query.samples_per_vertex,
        energy: query.energy,
        enforce_energy: false,
        enforce_load: false,
        distance_budget: Some(query.distance_budget),
    };
    brute_force(&query.world, &eval, &rules)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GreedyMode {
    /// Geometric path length budget; load and energy are only reported.
    Distance { budget: f64 },
    /// The energy budget, load capacity and distance cap of the
    /// [`EnergyParams`].
    Energy,
}

#[derive(Debug, Clone)]
pub struct GreedyQuery {
    pub world: World,
    pub field: FieldModel,
    pub energy: EnergyParams,
    pub mode: GreedyMode,
}

/// One greedy decision: a target vertex reached along a shortest route.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyMove {
    pub route: Vec<usize>,
    pub samples: u32,
    pub travel_cost: f64,
    pub gain: f64,
}

impl GreedyMove {
    pub fn target(&self) -> usize {
        *self.route.last().unwrap()
    }

    pub fn score(&self) -> f64 {
        self.gain / self.travel_cost
    }
}

struct GreedyState {
    steps: Vec<Step>,
    visited: Vec<bool>,
    energy: f64,
    distance: f64,
    carried: u64,
    variance: f64,
}

impl GreedyQuery {
    fn mass(&self, carried: u64) -> f64 {
        self.energy.base_mass + self.energy.lambda * carried as f64
    }

    fn load_ok(&self, carried: u64) -> bool {
        match self.mode {
            GreedyMode::Distance { .. } => true,
            GreedyMode::Energy => self.energy.lambda * carried as f64 <= self.energy.l_max + FEASIBILITY_TOL,
        }
    }

    /// Whether a robot at some vertex with the given totals can still reach
    /// the target over a remaining route of cost `to_target`.
    fn affordable(&self, energy: f64, distance: f64, mass: f64, to_target: f64) -> bool {
        if !to_target.is_finite() {
            return false;
        }
        match self.mode {
            GreedyMode::Distance { budget } => distance + to_target <= budget + FEASIBILITY_TOL,
            GreedyMode::Energy => {
                let within_cap = self
                    .energy
                    .distance_cap
                    .is_none_or(|b| distance + to_target <= b + FEASIBILITY_TOL);
                within_cap && energy + mass * to_target <= self.energy.budget + FEASIBILITY_TOL
            }
        }
    }

    /// Largest count in `1..=S_max` that keeps the target reachable.
    fn affordable_count(&self, energy: f64, distance: f64, carried: u64, to_target: f64) -> Option<u32> {
        (1..=self.energy.s_max).rev().find(|&c| {
            let carried = carried + u64::from(c);
            self.load_ok(carried) && self.affordable(energy, distance, self.mass(carried), to_target)
        })
    }

    /// Every feasible next move from the current state, in vertex order.
    fn candidate_moves(&self, eval: &FieldEval, state: &GreedyState) -> Result<Vec<GreedyMove>> {
        let t = self.world.target();
        let u = state.steps.last().unwrap().vertex;
        let mass = self.mass(state.carried);
        let mut sampled: Vec<(usize, u32)> = state
            .steps
            .iter()
            .filter(|s| s.samples > 0)
            .map(|s| (s.vertex, s.samples))
            .collect();
        sampled.sort_unstable();
        let mut moves = Vec::new();
        for w in 0..self.world.n() {
            if state.visited[w] || w == t {
                continue;
            }
            let mut no_target = state.visited.clone();
            no_target[t] = true;
            let Some((route, cost)) = self.world.shortest_route(u, w, &no_target) else {
                continue;
            };
            let mut blocked = state.visited.clone();
            for &r in &route[..route.len() - 1] {
                blocked[r] = true;
            }
            let Some((_, to_t)) = self.world.shortest_route(w, t, &blocked) else {
                continue;
            };
            let energy = state.energy + mass * cost;
            let distance = state.distance + cost;
            let Some(c) = self.affordable_count(energy, distance, state.carried, to_t) else {
                continue;
            };
            let mut with_w = sampled.clone();
            with_w.push((w, c));
            with_w.sort_unstable();
            let gain = state.variance - eval.posterior_variance_sampled(&with_w)?;
            moves.push(GreedyMove {
                route,
                samples: c,
                travel_cost: cost,
                gain,
            });
        }
        Ok(moves)
    }

    fn apply(&self, state: &mut GreedyState, route: &[usize], samples: u32) {
        for w in route.windows(2) {
            let d = self.world.cost(w[0], w[1]).unwrap();
            state.energy += d * self.mass(state.carried);
            state.distance += d;
            state.visited[w[1]] = true;
            let count = if w[1] == *route.last().unwrap() { samples } else { 0 };
            state.carried += u64::from(count);
            state.steps.push(Step::new(w[1], count));
        }
    }
}

/// Every move the greedy planner weighs from the start state, before it
/// commits to the first one.
pub fn greedy_first_options(query: &GreedyQuery) -> Result<Vec<GreedyMove>> {
    let (report, _) = solve_greedy_traced(query)?;
    let Some(plan) = report.plan else {
        return Ok(Vec::new());
    };
    let eval = FieldEval::new(&query.field, &query.world.positions())?;
    let start = plan.steps[0];
    let mut visited = vec![false; query.world.n()];
    visited[start.vertex] = true;
    let sampled: Vec<(usize, u32)> = if start.samples > 0 {
        vec![(start.vertex, start.samples)]
    } else {
        Vec::new()
    };
    let state = GreedyState {
        steps: vec![start],
        visited,
        energy: 0.0,
        distance: 0.0,
        carried: u64::from(start.samples),
        variance: eval.posterior_variance_sampled(&sampled)?,
    };
    query.candidate_moves(&eval, &state)
}

/// Repeatedly moves to the vertex with the largest posterior variance
/// reduction per unit travel cost, reserving a shortest route to the target,
/// then finishes at the target.
pub fn solve_greedy(query: &GreedyQuery) -> Result<SolveReport> {
    let (report, _) = solve_greedy_traced(query)?;
    Ok(report)
}

/// [`solve_greedy`] plus the sequence of moves it committed to.
pub fn solve_greedy_traced(query: &GreedyQuery) -> Result<(SolveReport, Vec<GreedyMove>)> {
    let started = Instant::now();
    query.field.validate()?;
    query.energy.validate()?;
    if let GreedyMode::Distance { budget } = query.mode {
        if !(budget.is_finite() && budget > 0.0) {
            return input_err(format!("distance budget must be > 0, got {budget}"));
        }
    }
    let world = &query.world;
    let eval = FieldEval::new(&query.field, &world.positions())?;
    let (s, t) = (world.start(), world.target());
    let infeasible = |nodes| SolveReport {
        plan: None,
        lower_bound: None,
        nodes_explored: nodes,
        wall_time_s: started.elapsed().as_secs_f64(),
        status: SolveStatus::Infeasible,
    };

    let Some((_, to_t)) = world.shortest_route(s, t, &[]) else {
        return Ok((infeasible(0), Vec::new()));
    };
    let start_count = query.affordable_count(0.0, 0.0, 0, to_t);
    if start_count.is_none() && !query.affordable(0.0, 0.0, query.mass(0), to_t) {
        return Ok((infeasible(0), Vec::new()));
    }
    let start_count = start_count.unwrap_or(0);
    let mut visited = vec![false; world.n()];
    visited[s] = true;
    let mut state = GreedyState {
        steps: vec![Step::new(s, start_count)],
        visited,
        energy: 0.0,
        distance: 0.0,
        carried: u64::from(start_count),
        variance: 0.0,
    };
    let initial: Vec<(usize, u32)> = if start_count > 0 {
        vec![(s, start_count)]
    } else {
        Vec::new()
    };
    state.variance = eval.posterior_variance_sampled(&initial)?;

    let mut trace = Vec::new();
    let mut considered = 0u64;
    loop {
        let moves = query.candidate_moves(&eval, &state)?;
        considered += moves.len() as u64;
        let best = moves
            .into_iter()
            .filter(|m| m.gain > 0.0)
            .reduce(|a, b| if b.score() > a.score() { b } else { a });
        let Some(mv) = best else { break };
        query.apply(&mut state, &mv.route, mv.samples);
        let mut sampled: Vec<(usize, u32)> = state
            .steps
            .iter()
            .filter(|s| s.samples > 0)
            .map(|s| (s.vertex, s.samples))
            .collect();
        sampled.sort_unstable();
        state.variance = eval.posterior_variance_sampled(&sampled)?;
        trace.push(mv);
    }

    let u = state.steps.last().unwrap().vertex;
    let Some((route, _)) = world.shortest_route(u, t, &state.visited) else {
        return Ok((infeasible(considered), trace));
    };
    let final_count = (0..=query.energy.s_max)
        .rev()
        .find(|&c| query.load_ok(state.carried + u64::from(c)))
        .unwrap_or(0);
    query.apply(&mut state, &route, final_count);

    let energy = path_energy(&state.steps, world, &query.energy)?;
    let distance = path_distance(&state.steps, world)?;
    let mut plan = Plan {
        steps: state.steps,
        objective: 0.0,
        energy,
        distance,
    };
    plan.objective = eval.posterior_variance_sampled(&plan.sampled())?;
    Ok((
        SolveReport {
            plan: Some(plan),
            lower_bound: None,
            nodes_explored: considered,
            wall_time_s: started.elapsed().as_secs_f64(),
            status: SolveStatus::Heuristic,
        },
        trace,
    ))
}
