//! Depth-first branch-and-bound over path prefixes.
//!
//! Shared by the load-aware planner (energy budget, free counts) and the
//! distance-budget baseline (uniform counts). Root subtrees may run on
//! separate threads; they share only a monotone incumbent objective.

use std::cmp::Ordering;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering as AtomicOrdering};
use std::time::Instant;

use crate::error::{input_err, LippError, Result};
use crate::exec::{map_ordered, Execution};
use crate::gp::FieldEval;
use crate::world::{all_pairs_cost_lower_bounds, Plan, Step, World};

use super::{SolveReport, SolveStatus, FEASIBILITY_TOL};

/// Visited sets are bitmasks.
pub(crate) const MAX_SEARCH_VERTICES: usize = 64;

#[derive(Debug, Clone, Copy)]
pub(crate) enum CountRule {
    /// Any count in `min..=max` at each visited vertex.
    Free { min: u32, max: u32 },
    /// Exactly this many at every visited vertex.
    Uniform(u32),
}

impl CountRule {
    fn max(self) -> u32 {
        match self {
            CountRule::Free { max, .. } => max,
            CountRule::Uniform(c) => c,
        }
    }

    fn min(self) -> u32 {
        match self {
            CountRule::Free { min, .. } => min,
            CountRule::Uniform(c) => c,
        }
    }
}

/// Secondary ordering among plans of equal objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TieRule {
    /// Energy, then distance, then vertex order.
    EnergyFirst,
    /// Distance, then vertex order; energy is only reported.
    DistanceFirst,
}

pub(crate) struct SearchSpec<'a> {
    pub world: &'a World,
    pub eval: &'a FieldEval,
    pub counts: CountRule,
    pub lambda: f64,
    pub base_mass: f64,
    pub load_cap: Option<f64>,
    pub energy_budget: Option<f64>,
    pub distance_budget: Option<f64>,
    pub tie: TieRule,
    pub gap: f64,
    pub node_limit: Option<u64>,
    pub execution: Execution,
}

#[derive(Debug, Clone)]
struct Candidate {
    steps: Vec<Step>,
    objective: f64,
    energy: f64,
    distance: f64,
}

impl Candidate {
    fn key_cmp(&self, other: &Candidate, tie: TieRule) -> Ordering {
        let by_cost = match tie {
            TieRule::EnergyFirst => self
                .energy
                .total_cmp(&other.energy)
                .then(self.distance.total_cmp(&other.distance)),
            TieRule::DistanceFirst => self.distance.total_cmp(&other.distance),
        };
        self.objective
            .total_cmp(&other.objective)
            .then(by_cost)
            .then_with(|| {
                self.steps
                    .iter()
                    .map(|s| s.vertex)
                    .cmp(other.steps.iter().map(|s| s.vertex))
            })
            .then_with(|| {
                let ta: u32 = self.steps.iter().map(|s| s.samples).sum();
                let tb: u32 = other.steps.iter().map(|s| s.samples).sum();
                ta.cmp(&tb)
            })
            .then_with(|| {
                self.steps
                    .iter()
                    .map(|s| s.samples)
                    .cmp(other.steps.iter().map(|s| s.samples))
            })
    }

    fn into_plan(self) -> Plan {
        Plan {
            steps: self.steps,
            objective: self.objective,
            energy: self.energy,
            distance: self.distance,
        }
    }
}

/// Cross-thread search state.
struct Shared {
    /// Bits of the best objective found so far (nonnegative, so bit order
    /// matches numeric order).
    incumbent: AtomicU64,
    nodes: AtomicU64,
    stop: AtomicBool,
}

impl Shared {
    fn incumbent(&self) -> f64 {
        f64::from_bits(self.incumbent.load(AtomicOrdering::Acquire))
    }

    fn offer(&self, value: f64) {
        let bits = value.max(0.0).to_bits();
        self.incumbent.fetch_min(bits, AtomicOrdering::AcqRel);
    }
}

/// Mutable DFS state for one prefix.
#[derive(Debug, Clone)]
struct State {
    path: Vec<Step>,
    visited: u64,
    energy: f64,
    distance: f64,
    carried: u64,
}

impl State {
    fn current(&self) -> usize {
        self.path.last().expect("state always holds the start").vertex
    }
}

struct TaskOutcome {
    best: Option<Candidate>,
    /// Smallest bound among subtrees dropped by the relative-gap rule.
    gap_bound: f64,
    error: Option<LippError>,
}

struct Worker<'s, 'a> {
    spec: &'s SearchSpec<'a>,
    sp: &'s [Vec<f64>],
    shared: &'s Shared,
    best: Option<Candidate>,
    gap_bound: f64,
}

impl SearchSpec<'_> {
    fn mass(&self, carried: u64) -> f64 {
        self.base_mass + self.lambda * carried as f64
    }

    fn load_ok(&self, carried: u64) -> bool {
        match self.load_cap {
            Some(cap) => self.lambda * carried as f64 <= cap + FEASIBILITY_TOL,
            None => true,
        }
    }

    fn counts_desc(&self) -> impl Iterator<Item = u32> {
        (self.counts.min()..=self.counts.max()).rev()
    }

    /// Whether a state at `v` with accumulated costs can still reach the
    /// target within the budgets.
    fn can_finish(&self, sp_to_t: f64, energy: f64, distance: f64, mass: f64) -> bool {
        if !sp_to_t.is_finite() {
            return false;
        }
        let slack = FEASIBILITY_TOL * (1.0 + 1e-9);
        if let Some(b) = self.distance_budget {
            if distance + sp_to_t > b + slack {
                return false;
            }
        }
        if let Some(budget) = self.energy_budget {
            if energy + mass * sp_to_t > budget + slack {
                return false;
            }
        }
        true
    }

    /// Lower bound for every completion of `state`: each vertex that could
    /// still be visited takes the largest count any completion could afford.
    fn bound(&self, sp: &[Vec<f64>], state: &State) -> Result<f64> {
        let t = self.world.target();
        let u = state.current();
        let mut sampled: Vec<(usize, u32)> = state
            .path
            .iter()
            .filter(|s| s.samples > 0)
            .map(|s| (s.vertex, s.samples))
            .collect();
        if u != t {
            let mass = self.mass(state.carried);
            for w in 0..self.world.n() {
                if state.visited & (1u64 << w) != 0 {
                    continue;
                }
                let (to_w, w_to_t) = (sp[u][w], sp[w][t]);
                if !(to_w.is_finite() && w_to_t.is_finite()) {
                    continue;
                }
                let dist = state.distance + to_w;
                let energy = state.energy + mass * to_w;
                let mut best = None;
                for c in self.counts_desc() {
                    let carried = state.carried + u64::from(c);
                    if !self.load_ok(carried) {
                        continue;
                    }
                    if self.can_finish(w_to_t, energy, dist, self.mass(carried)) {
                        best = Some(c);
                        break;
                    }
                }
                if let Some(c) = best.filter(|&c| c > 0) {
                    sampled.push((w, c));
                }
            }
        }
        sampled.sort_unstable();
        self.eval.posterior_variance_sampled(&sampled)
    }

    pub(crate) fn prefix_bound(&self, prefix: &[Step]) -> Result<f64> {
        let Some(first) = prefix.first() else {
            return input_err("prefix must contain at least the start vertex");
        };
        if first.vertex != self.world.start() {
            return input_err("prefix must begin at the start vertex");
        }
        let sp = all_pairs_cost_lower_bounds(self.world);
        let mut state = State {
            path: vec![*first],
            visited: 1u64 << first.vertex,
            energy: 0.0,
            distance: 0.0,
            carried: u64::from(first.samples),
        };
        for step in &prefix[1..] {
            let u = state.current();
            let Some(d) = self.world.cost(u, step.vertex) else {
                return input_err(format!("no edge ({u}, {})", step.vertex));
            };
            if state.visited & (1u64 << step.vertex) != 0 {
                return input_err(format!("vertex {} repeated in prefix", step.vertex));
            }
            state.energy += d * self.mass(state.carried);
            state.distance += d;
            state.carried += u64::from(step.samples);
            state.visited |= 1u64 << step.vertex;
            state.path.push(*step);
        }
        self.bound(&sp, &state)
    }

    /// Root subtrees: one per (start count, first edge).
    fn root_tasks(&self) -> Vec<(u32, usize, f64)> {
        let s = self.world.start();
        let mut tasks = Vec::new();
        for c in self.counts_desc() {
            for &(v, d) in self.world.out_edges(s) {
                tasks.push((c, v, d));
            }
        }
        tasks
    }

    pub(crate) fn run(&self) -> Result<SolveReport> {
        let started = Instant::now();
        if self.world.n() > MAX_SEARCH_VERTICES {
            return input_err(format!("at most {MAX_SEARCH_VERTICES} vertices supported"));
        }
        let sp = all_pairs_cost_lower_bounds(self.world);
        let shared = Shared {
            incumbent: AtomicU64::new(f64::INFINITY.to_bits()),
            nodes: AtomicU64::new(0),
            stop: AtomicBool::new(false),
        };
        let s = self.world.start();

        let mut root_bound = f64::INFINITY;
        for c in self.counts_desc() {
            let carried = u64::from(c);
            if !self.load_ok(carried) {
                continue;
            }
            if !self.can_finish(sp[s][self.world.target()], 0.0, 0.0, self.mass(carried)) {
                continue;
            }
            let state = State {
                path: vec![Step::new(s, c)],
                visited: 1u64 << s,
                energy: 0.0,
                distance: 0.0,
                carried,
            };
            root_bound = root_bound.min(self.bound(&sp, &state)?);
        }

        let tasks = self.root_tasks();
        let outcomes = map_ordered(self.execution, &tasks, |&(c, v, d)| {
            let mut worker = Worker {
                spec: self,
                sp: &sp,
                shared: &shared,
                best: None,
                gap_bound: f64::INFINITY,
            };
            let error = worker.root_task(c, v, d).err();
            TaskOutcome {
                best: worker.best,
                gap_bound: worker.gap_bound,
                error,
            }
        });

        let mut best: Option<Candidate> = None;
        let mut gap_bound = f64::INFINITY;
        for outcome in outcomes {
            if let Some(err) = outcome.error {
                return Err(err);
            }
            gap_bound = gap_bound.min(outcome.gap_bound);
            if let Some(cand) = outcome.best {
                let better = match &best {
                    None => true,
                    Some(b) => cand.key_cmp(b, self.tie) == Ordering::Less,
                };
                if better {
                    best = Some(cand);
                }
            }
        }

        let nodes = shared.nodes.load(AtomicOrdering::Relaxed);
        let hit_limit = shared.stop.load(AtomicOrdering::Relaxed);
        let (status, lower_bound) = match (&best, hit_limit) {
            (_, true) => {
                let inc = best.as_ref().map_or(f64::INFINITY, |b| b.objective);
                (SolveStatus::NodeLimit, Some(root_bound.min(inc)))
            }
            (None, false) => (SolveStatus::Infeasible, None),
            (Some(b), false) => {
                if gap_bound < b.objective {
                    (SolveStatus::GapReached, Some(gap_bound))
                } else {
                    (SolveStatus::Optimal, Some(b.objective))
                }
            }
        };
        Ok(SolveReport {
            plan: best.map(Candidate::into_plan),
            lower_bound: lower_bound.filter(|v| v.is_finite()),
            nodes_explored: nodes,
            wall_time_s: started.elapsed().as_secs_f64(),
            status,
        })
    }
}

enum Verdict {
    Explore,
    Prune,
}

impl Worker<'_, '_> {
    fn tick(&self) -> bool {
        let count = self.shared.nodes.fetch_add(1, AtomicOrdering::Relaxed) + 1;
        if let Some(limit) = self.spec.node_limit {
            if count > limit {
                self.shared.stop.store(true, AtomicOrdering::Relaxed);
            }
        }
        !self.shared.stop.load(AtomicOrdering::Relaxed)
    }

    fn judge(&mut self, bound: f64) -> Verdict {
        let incumbent = self.shared.incumbent();
        if !incumbent.is_finite() {
            return Verdict::Explore;
        }
        // keep exact ties alive so the final choice does not depend on timing
        let slack = 1e-12 * incumbent.abs() + 1e-15;
        if bound > incumbent + slack {
            return Verdict::Prune;
        }
        if self.spec.gap > 0.0 && bound >= incumbent * (1.0 - self.spec.gap) {
            self.gap_bound = self.gap_bound.min(bound);
            return Verdict::Prune;
        }
        Verdict::Explore
    }

    fn root_task(&mut self, start_count: u32, v: usize, d: f64) -> Result<()> {
        let spec = self.spec;
        let s = spec.world.start();
        let carried = u64::from(start_count);
        if !spec.load_ok(carried) {
            return Ok(());
        }
        let mut state = State {
            path: vec![Step::new(s, start_count)],
            visited: 1u64 << s,
            energy: 0.0,
            distance: 0.0,
            carried,
        };
        if !spec.can_finish(self.sp[s][spec.world.target()], 0.0, 0.0, spec.mass(carried)) {
            return Ok(());
        }
        self.descend(&mut state, v, d)
    }

    /// Tries every admissible count at `v` after traversing `(u, v)`.
    fn descend(&mut self, state: &mut State, v: usize, d: f64) -> Result<()> {
        let spec = self.spec;
        let t = spec.world.target();
        let mass_u = spec.mass(state.carried);
        let energy = state.energy + d * mass_u;
        let distance = state.distance + d;
        let to_t = self.sp[v][t];
        if !spec.can_finish(to_t, energy, distance, mass_u) {
            return Ok(());
        }
        for c in spec.counts_desc() {
            let carried = state.carried + u64::from(c);
            if !spec.load_ok(carried) {
                continue;
            }
            if !spec.can_finish(to_t, energy, distance, spec.mass(carried)) {
                continue;
            }
            if !self.tick() {
                return Ok(());
            }
            let saved = (state.energy, state.distance, state.carried, state.visited);
            state.energy = energy;
            state.distance = distance;
            state.carried = carried;
            state.visited |= 1u64 << v;
            state.path.push(Step::new(v, c));

            let result = self.visit(state);

            state.path.pop();
            (state.energy, state.distance, state.carried, state.visited) = saved;
            result?;
        }
        Ok(())
    }

    fn visit(&mut self, state: &mut State) -> Result<()> {
        let spec = self.spec;
        let bound = spec.bound(self.sp, state)?;
        if state.current() == spec.world.target() {
            // with nothing left to add the bound is the plan's own objective
            self.accept(state, bound);
            return Ok(());
        }
        if let Verdict::Prune = self.judge(bound) {
            return Ok(());
        }
        let u = state.current();
        for &(v, d) in spec.world.out_edges(u) {
            if state.visited & (1u64 << v) != 0 {
                continue;
            }
            self.descend(state, v, d)?;
            if self.shared.stop.load(AtomicOrdering::Relaxed) {
                break;
            }
        }
        Ok(())
    }

    fn accept(&mut self, state: &State, objective: f64) {
        let candidate = Candidate {
            steps: state.path.clone(),
            objective,
            energy: state.energy,
            distance: state.distance,
        };
        let better = match &self.best {
            None => true,
            Some(b) => candidate.key_cmp(b, self.spec.tie) == Ordering::Less,
        };
        if better {
            self.shared.offer(objective);
            self.best = Some(candidate);
        }
    }
}
