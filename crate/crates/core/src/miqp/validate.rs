//! Building and checking candidate assignments of the model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{input_err, LippError, Result};
use crate::gp::{Point, SampleAllocation};
use crate::solver::PlanQuery;
use crate::world::{path_energy, EnergyParams, Plan, Step, Vertex, World};

use super::{names, ConstraintTag, MiqpModel, Sense, VarKind};

/// Absolute tolerance on every row, bound and integrality check.
pub const VALIDATION_TOL: f64 = 1e-6;

/// Values for every model variable, in model order.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub values: Vec<f64>,
}

impl Assignment {
    /// Looks every model variable up by name; extra names are ignored.
    pub fn from_map(model: &MiqpModel, map: &BTreeMap<String, f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(model.variables.len());
        for v in &model.variables {
            match map.get(&v.name) {
                Some(&x) => values.push(x),
                None => return input_err(format!("assignment has no value for {}", v.name)),
            }
        }
        Ok(Self { values })
    }

    pub fn to_map(&self, model: &MiqpModel) -> BTreeMap<String, f64> {
        model
            .variables
            .iter()
            .zip(&self.values)
            .map(|(v, &x)| (v.name.clone(), x))
            .collect()
    }

    pub fn get(&self, model: &MiqpModel, name: &str) -> Option<f64> {
        model.var(name).map(|i| self.values[i])
    }

    pub fn set(&mut self, model: &MiqpModel, name: &str, value: f64) -> Result<()> {
        match model.var(name) {
            Some(i) => {
                self.values[i] = value;
                Ok(())
            }
            None => input_err(format!("model has no variable {name}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowCheck {
    pub constraint_tag: String,
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Amount by which the row is violated; zero when satisfied.
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub rows: Vec<RowCheck>,
    pub failed: usize,
    pub objective: f64,
    /// Path read off the routing variables, when they describe one.
    pub path: Option<Vec<Step>>,
    /// True transport energy of `path`.
    pub path_energy: Option<f64>,
    /// `sum d_uv T_uv`.
    pub linearized_energy: f64,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }

    pub fn failures(&self) -> impl Iterator<Item = &RowCheck> {
        self.rows.iter().filter(|r| !r.pass)
    }
}

fn check(tag: &str, name: String, lhs: f64, sense: Sense, rhs: f64) -> RowCheck {
    let residual = match sense {
        Sense::Le => (lhs - rhs).max(0.0),
        Sense::Ge => (rhs - lhs).max(0.0),
        Sense::Eq => (lhs - rhs).abs(),
    };
    RowCheck {
        constraint_tag: tag.to_string(),
        name,
        lhs,
        rhs,
        residual,
        pass: residual <= VALIDATION_TOL,
    }
}

/// Encodes `plan` in the model's variables. Estimator coefficients are the
/// optimal ones for the plan's sample allocation, so the model objective
/// equals the plan's posterior variance.
pub fn build_assignment(query: &PlanQuery, model: &MiqpModel, plan: &Plan) -> Result<Assignment> {
    let meta = &model.meta;
    let n = meta.n;
    if query.world.n() != n {
        return input_err("query and model disagree on the vertex count");
    }
    let mut values = vec![0.0; model.variables.len()];
    let mut put = |name: String, value: f64| -> Result<()> {
        match model.var(&name) {
            Some(i) => {
                values[i] = value;
                Ok(())
            }
            None => input_err(format!("model has no variable {name}")),
        }
    };

    let mut loads = vec![0.0; n];
    let mut carried = 0u64;
    for (pos, step) in plan.steps.iter().enumerate() {
        let v = step.vertex;
        put(names::y(v), 1.0)?;
        put(names::order(v), pos as f64)?;
        put(names::count(v), f64::from(step.samples))?;
        if step.samples > 0 {
            put(names::z(v, step.samples), 1.0)?;
        }
        carried += u64::from(step.samples);
        let load = meta.lambda * carried as f64;
        loads[v] = load;
        put(names::load(v), load)?;
        if let Some(next) = plan.steps.get(pos + 1) {
            put(names::chi(v, next.vertex), 1.0)?;
            put(names::transport(v, next.vertex), meta.base_mass + load)?;
        }
    }
    for v in 0..n {
        put(names::mass(v), meta.base_mass + loads[v])?;
    }

    let eval = query.field_eval()?;
    let allocation = SampleAllocation::from_pairs(n, &plan.sampled())?;
    let (estimator, _) = eval.optimal_llse(&allocation)?;
    for t in 0..meta.test_count {
        for v in 0..n {
            let a = estimator.coefficients[(t, v)];
            put(names::estimator(t, v), a)?;
            let l = allocation.get(v);
            if l > 0 {
                put(names::estimator_level(t, v, l), a)?;
            }
        }
    }
    Ok(Assignment { values })
}

/// Checks every row, variable bound and integrality requirement, recomputes
/// the objective, and cross-checks the linearised energy against the true
/// energy of the path the routing variables describe.
pub fn validate_assignment(model: &MiqpModel, assignment: &Assignment) -> Result<ValidationReport> {
    let x = &assignment.values;
    if x.len() != model.variables.len() {
        return input_err(format!(
            "assignment has {} values, model has {} variables",
            x.len(),
            model.variables.len()
        ));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return input_err(format!("non-finite value for {}", model.variables[i].name));
    }
    let mut rows = Vec::with_capacity(model.constraints.len() + 2 * x.len());
    for c in &model.constraints {
        rows.push(check(c.tag.as_str(), c.name.clone(), c.lhs(x), c.sense, c.rhs));
    }
    for (var, &value) in model.variables.iter().zip(x) {
        if var.lower.is_finite() {
            rows.push(check(
                "variable_bounds",
                format!("{}.lo", var.name),
                value,
                Sense::Ge,
                var.lower,
            ));
        }
        if var.upper.is_finite() {
            rows.push(check(
                "variable_bounds",
                format!("{}.hi", var.name),
                value,
                Sense::Le,
                var.upper,
            ));
        }
        if var.kind != VarKind::Continuous {
            rows.push(check("integrality", var.name.clone(), value, Sense::Eq, value.round()));
        }
    }

    let meta = &model.meta;
    let value_of = |name: String| -> Result<f64> {
        model
            .var(&name)
            .map(|i| x[i])
            .ok_or_else(|| LippError::Input(format!("model has no variable {name}")))
    };
    let mut linearized_energy = 0.0;
    for e in &meta.edges {
        linearized_energy += e.cost * value_of(names::transport(e.u, e.v))?;
    }

    let mut notes = Vec::new();
    let path = extract_path(model, x)?;
    let mut true_energy = None;
    match &path {
        Ok(steps) => {
            let world = meta_world(model)?;
            let params = EnergyParams {
                lambda: meta.lambda,
                base_mass: meta.base_mass,
                s_max: meta.s_max,
                l_max: meta.l_max,
                budget: meta.budget,
                distance_cap: meta.distance_cap,
            };
            let energy = path_energy(steps, &world, &params)?;
            rows.push(check(
                "path_energy_budget",
                "path_energy_budget".into(),
                energy,
                Sense::Le,
                meta.budget,
            ));
            rows.push(check(
                "path_energy_linearization",
                "path_energy_linearization".into(),
                linearized_energy,
                Sense::Eq,
                energy,
            ));
            for s in steps.iter().filter(|s| s.samples == 0) {
                notes.push(format!(
                    "vertex {} is visited without sampling; the model requires at least one sample per visited vertex",
                    s.vertex
                ));
            }
            true_energy = Some(energy);
        }
        Err(why) => {
            rows.push(RowCheck {
                constraint_tag: "path_extraction".into(),
                name: "path_extraction".into(),
                lhs: 0.0,
                rhs: 0.0,
                residual: 1.0,
                pass: false,
            });
            notes.push(format!("routing variables do not describe an s-t path: {why}"));
        }
    }

    let failed = rows.iter().filter(|r| !r.pass).count();
    Ok(ValidationReport {
        rows,
        failed,
        objective: model.objective.evaluate(x),
        path: path.ok(),
        path_energy: true_energy,
        linearized_energy,
        notes,
    })
}

/// Follows active edges from the start. The inner result is an explanation
/// when the routing variables do not form a simple s-t path.
fn extract_path(model: &MiqpModel, x: &[f64]) -> Result<std::result::Result<Vec<Step>, String>> {
    let meta = &model.meta;
    let mut active: Vec<Vec<usize>> = vec![Vec::new(); meta.n];
    let mut active_count = 0;
    for e in &meta.edges {
        let chi = model
            .var(&names::chi(e.u, e.v))
            .ok_or_else(|| LippError::Input(format!("model has no variable {}", names::chi(e.u, e.v))))?;
        if x[chi] > 0.5 {
            active[e.u].push(e.v);
            active_count += 1;
        }
    }
    let samples_at = |v: usize| -> u32 {
        (1..=meta.s_max)
            .filter(|&c| model.var(&names::z(v, c)).is_some_and(|i| x[i] > 0.5))
            .sum()
    };
    let mut seen = vec![false; meta.n];
    let mut u = meta.start;
    let mut steps = vec![Step::new(u, samples_at(u))];
    seen[u] = true;
    while u != meta.target {
        let next = match active[u].as_slice() {
            [v] => *v,
            [] => return Ok(Err(format!("no active edge leaves vertex {u}"))),
            _ => return Ok(Err(format!("several active edges leave vertex {u}"))),
        };
        if seen[next] {
            return Ok(Err(format!("active edges revisit vertex {next}")));
        }
        seen[next] = true;
        steps.push(Step::new(next, samples_at(next)));
        u = next;
    }
    if active_count != steps.len() - 1 {
        return Ok(Err(format!(
            "{} active edges but the s-t path uses {}",
            active_count,
            steps.len() - 1
        )));
    }
    Ok(Ok(steps))
}

/// Graph rebuilt from the model's edge list; geometry is irrelevant here.
fn meta_world(model: &MiqpModel) -> Result<World> {
    let meta = &model.meta;
    let vertices = (0..meta.n)
        .map(|id| Vertex {
            id,
            position: Point { x: 0.0, y: 0.0 },
            height: 0.0,
        })
        .collect();
    World::new(vertices, meta.edges.clone(), meta.start, meta.target)
}

/// `true` when every row of `tag` passes.
pub fn tag_passes(report: &ValidationReport, tag: ConstraintTag) -> bool {
    report
        .rows
        .iter()
        .filter(|r| r.constraint_tag == tag.as_str())
        .all(|r| r.pass)
}
