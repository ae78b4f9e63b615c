//! Exhaustive reference solver. Enumerates every simple s-t path and every
//! allocation on it with no pruning of any kind.

use std::cmp::Ordering;
use std::time::Instant;

use crate::error::{LippError, Result};
use crate::gp::FieldEval;
use crate::world::{load_profile, path_distance, path_energy, EnergyParams, Plan, Step, World};

use super::{SolveReport, SolveStatus, FEASIBILITY_TOL};

pub const DEFAULT_MAX_VERTICES: usize = 8;

pub(crate) struct BruteRules {
    pub min_count: u32,
    pub max_count: u32,
    /// Mass model; also used for reporting when the budget is not enforced.
    pub energy: EnergyParams,
    pub enforce_energy: bool,
    pub enforce_load: bool,
    pub distance_budget: Option<f64>,
}

fn simple_paths(world: &World) -> Vec<Vec<usize>> {
    fn walk(world: &World, path: &mut Vec<usize>, on_path: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let u = *path.last().unwrap();
        if u == world.target() {
            out.push(path.clone());
            return;
        }
        for &(v, _) in world.out_edges(u) {
            if on_path[v] {
                continue;
            }
            on_path[v] = true;
            path.push(v);
            walk(world, path, on_path, out);
            path.pop();
            on_path[v] = false;
        }
    }
    let mut out = Vec::new();
    let mut on_path = vec![false; world.n()];
    on_path[world.start()] = true;
    walk(world, &mut vec![world.start()], &mut on_path, &mut out);
    out
}

/// Ordering: objective, then vertex sequence, then total samples, then counts.
fn oracle_cmp(a: &Plan, b: &Plan) -> Ordering {
    a.objective
        .total_cmp(&b.objective)
        .then_with(|| a.vertex_sequence().cmp(&b.vertex_sequence()))
        .then_with(|| a.total_samples().cmp(&b.total_samples()))
        .then_with(|| a.steps.iter().map(|s| s.samples).cmp(b.steps.iter().map(|s| s.samples)))
}

pub(crate) fn brute_force(world: &World, eval: &FieldEval, rules: &BruteRules) -> Result<SolveReport> {
    let started = Instant::now();
    let mut best: Option<Plan> = None;
    let mut evaluated = 0u64;
    for vertices in simple_paths(world) {
        let mut counts = vec![rules.min_count; vertices.len()];
        loop {
            let steps: Vec<Step> = vertices.iter().zip(&counts).map(|(&v, &c)| Step::new(v, c)).collect();
            if let Some(plan) = evaluate(world, eval, rules, steps)? {
                evaluated += 1;
                if best.as_ref().is_none_or(|b| oracle_cmp(&plan, b) == Ordering::Less) {
                    best = Some(plan);
                }
            }
            // odometer over {min..=max}^p
            let mut i = 0;
            while i < counts.len() && counts[i] == rules.max_count {
                counts[i] = rules.min_count;
                i += 1;
            }
            if i == counts.len() {
                break;
            }
            counts[i] += 1;
        }
    }
    let status = if best.is_some() {
        SolveStatus::Optimal
    } else {
        SolveStatus::Infeasible
    };
    Ok(SolveReport {
        lower_bound: best.as_ref().map(|p| p.objective),
        plan: best,
        nodes_explored: evaluated,
        wall_time_s: started.elapsed().as_secs_f64(),
        status,
    })
}

fn evaluate(world: &World, eval: &FieldEval, rules: &BruteRules, steps: Vec<Step>) -> Result<Option<Plan>> {
    if rules.enforce_load {
        match load_profile(&steps, &rules.energy) {
            Ok(_) => {}
            Err(LippError::InfeasiblePlan(_)) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    let energy = path_energy(&steps, world, &rules.energy)?;
    if rules.enforce_energy && energy > rules.energy.budget + FEASIBILITY_TOL {
        return Ok(None);
    }
    let distance = path_distance(&steps, world)?;
    if let Some(b) = rules.distance_budget {
        if distance > b + FEASIBILITY_TOL {
            return Ok(None);
        }
    }
    let mut plan = Plan {
        steps,
        objective: 0.0,
        energy,
        distance,
    };
    plan.objective = eval.posterior_variance_sampled(&plan.sampled())?;
    Ok(Some(plan))
}
