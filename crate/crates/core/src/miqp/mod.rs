//! Mixed-integer quadratic model of the load-aware planning problem.
//!
//! The model is built explicitly (variables, tagged linear rows, quadratic
//! objective) so it can be written out for an external solver and so that
//! candidate assignments can be checked row by row. The native planner in
//! [`crate::solver`] never solves it; the two are tied together by
//! [`build_assignment`] and [`validate_assignment`].
//!
//! Load propagation uses the samples collected at the *head* of each edge,
//! `L_v >= L_u + lambda l_v - M (1 - chi_uv)`, so that `L_v` is the load
//! carried when leaving `v`. Energy is linearised with the McCormick
//! envelope of `T_uv = R_u chi_uv`.

mod lp;
mod validate;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{input_err, LippError, Result};
use crate::gp::SampleAllocation;
use crate::solver::PlanQuery;
use crate::world::Edge;

pub use lp::{export_model, parse_lp, write_lp};
pub use validate::{
    build_assignment, tag_passes, validate_assignment, Assignment, RowCheck, ValidationReport, VALIDATION_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// Which family of rows a constraint belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintTag {
    /// In-flow equals out-flow at intermediate vertices.
    FlowConservation,
    /// At most one unit of in-flow at intermediate vertices.
    FlowCapacity,
    StartOut,
    TargetIn,
    StartNoIn,
    TargetNoOut,
    /// `y_v` equals in-flow.
    VertexActivation,
    /// `y_s = y_t = 1`.
    VisitFixed,
    /// `|A_tv| <= A_max y_v`.
    EstimatorActivation,
    OrderStart,
    OrderBounds,
    /// Miller-Tucker-Zemlin precedence along active edges.
    Mtz,
    LoadStart,
    LoadPropagation,
    LoadBounds,
    RobotMass,
    SampleCount,
    /// Exactly one sampling level per visited vertex.
    SamplingActivation,
    /// `A_tv = sum_c A_tvc`.
    EstimatorAggregation,
    /// `|A_tvc| <= A_max z_vc`.
    EstimatorLevelLink,
    /// `sum d_uv T_uv <= B`.
    EnergyBudget,
    /// `T_uv <= R_u`.
    McCormickMass,
    /// `T_uv <= R_max chi_uv`.
    McCormickSwitch,
    /// `T_uv >= R_u - R_max (1 - chi_uv)`.
    McCormickLower,
    /// `T_uv >= 0`.
    McCormickNonneg,
    DistanceCap,
}

impl ConstraintTag {
    pub const ALL: [ConstraintTag; 26] = [
        ConstraintTag::FlowConservation,
        ConstraintTag::FlowCapacity,
        ConstraintTag::StartOut,
        ConstraintTag::TargetIn,
        ConstraintTag::StartNoIn,
        ConstraintTag::TargetNoOut,
        ConstraintTag::VertexActivation,
        ConstraintTag::VisitFixed,
        ConstraintTag::EstimatorActivation,
        ConstraintTag::OrderStart,
        ConstraintTag::OrderBounds,
        ConstraintTag::Mtz,
        ConstraintTag::LoadStart,
        ConstraintTag::LoadPropagation,
        ConstraintTag::LoadBounds,
        ConstraintTag::RobotMass,
        ConstraintTag::SampleCount,
        ConstraintTag::SamplingActivation,
        ConstraintTag::EstimatorAggregation,
        ConstraintTag::EstimatorLevelLink,
        ConstraintTag::EnergyBudget,
        ConstraintTag::McCormickMass,
        ConstraintTag::McCormickSwitch,
        ConstraintTag::McCormickLower,
        ConstraintTag::McCormickNonneg,
        ConstraintTag::DistanceCap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConstraintTag::FlowConservation => "flow_conservation",
            ConstraintTag::FlowCapacity => "flow_capacity",
            ConstraintTag::StartOut => "start_out",
            ConstraintTag::TargetIn => "target_in",
            ConstraintTag::StartNoIn => "start_no_in",
            ConstraintTag::TargetNoOut => "target_no_out",
            ConstraintTag::VertexActivation => "vertex_activation",
            ConstraintTag::VisitFixed => "visit_fixed",
            ConstraintTag::EstimatorActivation => "estimator_activation",
            ConstraintTag::OrderStart => "order_start",
            ConstraintTag::OrderBounds => "order_bounds",
            ConstraintTag::Mtz => "mtz",
            ConstraintTag::LoadStart => "load_start",
            ConstraintTag::LoadPropagation => "load_propagation",
            ConstraintTag::LoadBounds => "load_bounds",
            ConstraintTag::RobotMass => "robot_mass",
            ConstraintTag::SampleCount => "sample_count",
            ConstraintTag::SamplingActivation => "sampling_activation",
            ConstraintTag::EstimatorAggregation => "estimator_aggregation",
            ConstraintTag::EstimatorLevelLink => "estimator_level_link",
            ConstraintTag::EnergyBudget => "energy_budget",
            ConstraintTag::McCormickMass => "mccormick_mass",
            ConstraintTag::McCormickSwitch => "mccormick_switch",
            ConstraintTag::McCormickLower => "mccormick_lower",
            ConstraintTag::McCormickNonneg => "mccormick_nonneg",
            ConstraintTag::DistanceCap => "distance_cap",
        }
    }

    pub fn is_mccormick(self) -> bool {
        matches!(
            self,
            ConstraintTag::McCormickMass
                | ConstraintTag::McCormickSwitch
                | ConstraintTag::McCormickLower
                | ConstraintTag::McCormickNonneg
        )
    }
}

impl fmt::Display for ConstraintTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConstraintTag {
    type Err = LippError;

    fn from_str(s: &str) -> Result<Self> {
        ConstraintTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| LippError::Input(format!("unknown constraint tag '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    /// `<tag>.<indices>`, e.g. `mtz.2.5`.
    pub name: String,
    pub tag: ConstraintTag,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn lhs(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, a)| a * values[i]).sum()
    }
}

/// `sum q_ij x_i x_j + sum c_i x_i + constant`, with `i <= j` in every
/// quadratic term.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadObjective {
    pub quadratic: Vec<(usize, usize, f64)>,
    pub linear: Vec<(usize, f64)>,
    pub constant: f64,
}

impl QuadObjective {
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        let quad: f64 = self.quadratic.iter().map(|&(i, j, q)| q * values[i] * values[j]).sum();
        let lin: f64 = self.linear.iter().map(|&(i, c)| c * values[i]).sum();
        quad + lin + self.constant
    }
}

/// Instance data carried alongside the model so that exported files can be
/// validated without the originating scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub n: usize,
    pub start: usize,
    pub target: usize,
    pub edges: Vec<Edge>,
    pub test_count: usize,
    pub lambda: f64,
    pub base_mass: f64,
    pub s_max: u32,
    pub l_max: f64,
    pub budget: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_cap: Option<f64>,
    pub noise_variance: f64,
    pub a_max: f64,
    pub big_m_order: f64,
    pub big_m_load: f64,
    pub max_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiqpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: QuadObjective,
    pub meta: ModelMeta,
    index: HashMap<String, usize>,
}

/// Variable naming scheme shared by the builder, exporter and validator.
pub mod names {
    pub fn chi(u: usize, v: usize) -> String {
        format!("chi_{u}_{v}")
    }
    pub fn y(v: usize) -> String {
        format!("y_{v}")
    }
    pub fn z(v: usize, c: u32) -> String {
        format!("z_{v}_{c}")
    }
    pub fn order(v: usize) -> String {
        format!("o_{v}")
    }
    pub fn count(v: usize) -> String {
        format!("l_{v}")
    }
    pub fn load(v: usize) -> String {
        format!("Ld_{v}")
    }
    pub fn mass(v: usize) -> String {
        format!("R_{v}")
    }
    pub fn estimator(t: usize, v: usize) -> String {
        format!("Atv_{t}_{v}")
    }
    pub fn estimator_level(t: usize, v: usize, c: u32) -> String {
        format!("Atvc_{t}_{v}_{c}")
    }
    pub fn transport(u: usize, v: usize) -> String {
        format!("T_{u}_{v}")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableCounts {
    pub binary: usize,
    pub integer: usize,
    pub continuous: usize,
}

impl VariableCounts {
    pub fn total(&self) -> usize {
        self.binary + self.integer + self.continuous
    }
}

impl MiqpModel {
    pub(crate) fn from_parts(
        variables: Vec<Variable>,
        constraints: Vec<Constraint>,
        objective: QuadObjective,
        meta: ModelMeta,
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(variables.len());
        for (i, v) in variables.iter().enumerate() {
            if index.insert(v.name.clone(), i).is_some() {
                return input_err(format!("duplicate variable {}", v.name));
            }
        }
        Ok(Self {
            variables,
            constraints,
            objective,
            meta,
            index,
        })
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn counts(&self) -> VariableCounts {
        let mut counts = VariableCounts::default();
        for v in &self.variables {
            match v.kind {
                VarKind::Binary => counts.binary += 1,
                VarKind::Integer => counts.integer += 1,
                VarKind::Continuous => counts.continuous += 1,
            }
        }
        counts
    }

    pub fn rows_with_tag(&self, tag: ConstraintTag) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter().filter(move |c| c.tag == tag)
    }

    /// Dense symmetric `H` with `x' H x` equal to the quadratic part of the
    /// objective.
    pub fn objective_hessian(&self) -> nalgebra::DMatrix<f64> {
        let n = self.variables.len();
        let mut h = nalgebra::DMatrix::zeros(n, n);
        for &(i, j, q) in &self.objective.quadratic {
            if i == j {
                h[(i, i)] += q;
            } else {
                h[(i, j)] += q / 2.0;
                h[(j, i)] += q / 2.0;
            }
        }
        h
    }
}

/// The feasible `T` interval the McCormick rows leave for a given `R_u` and
/// `chi_uv`.
pub fn mccormick_interval(mass: f64, chi: f64, max_mass: f64) -> (f64, f64) {
    let lo = (mass - max_mass * (1.0 - chi)).max(0.0);
    let hi = mass.min(max_mass * chi);
    (lo, hi)
}

struct Builder {
    variables: Vec<Variable>,
    index: HashMap<String, usize>,
    constraints: Vec<Constraint>,
}

impl Builder {
    fn add_var(&mut self, name: String, kind: VarKind, lower: f64, upper: f64) -> usize {
        let id = self.variables.len();
        self.index.insert(name.clone(), id);
        self.variables.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        id
    }

    fn id(&self, name: &str) -> usize {
        self.index[name]
    }

    fn row(&mut self, tag: ConstraintTag, suffix: &str, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        let terms: Vec<_> = terms.into_iter().filter(|&(_, a)| a != 0.0).collect();
        if terms.is_empty() {
            return;
        }
        let name = if suffix.is_empty() {
            tag.as_str().to_string()
        } else {
            format!("{}.{suffix}", tag.as_str())
        };
        self.constraints.push(Constraint {
            name,
            tag,
            terms,
            sense,
            rhs,
        });
    }
}

/// Estimator coefficient bound: ten times the largest coefficient of the
/// optimal estimator when every vertex is sampled `S_max` times.
pub fn default_a_max(query: &PlanQuery) -> Result<f64> {
    let eval = query.field_eval()?;
    let full = SampleAllocation::from_counts(vec![query.energy.s_max; query.world.n()]);
    let (estimator, _) = eval.optimal_llse(&full)?;
    let largest = estimator.max_abs();
    Ok(if largest > 0.0 { 10.0 * largest } else { 1.0 })
}

/// Builds the full model for `query`.
pub fn build_miqp(query: &PlanQuery) -> Result<MiqpModel> {
    query.validate()?;
    let world = &query.world;
    let energy = &query.energy;
    let eval = query.field_eval()?;
    let n = world.n();
    let m = query.field.test_count();
    let s_max = energy.s_max;
    let (s, t) = (world.start(), world.target());
    let a_max = default_a_max(query)?;
    let big_m_order = n as f64;
    let big_m_load = energy.l_max + energy.lambda * f64::from(s_max);
    let max_mass = energy.max_mass();
    let inf = f64::INFINITY;
    let edges = world.edges().to_vec();
    let levels = || 1..=s_max;

    let mut b = Builder {
        variables: Vec::new(),
        index: HashMap::new(),
        constraints: Vec::new(),
    };
    for e in &edges {
        b.add_var(names::chi(e.u, e.v), VarKind::Binary, 0.0, 1.0);
    }
    for v in 0..n {
        b.add_var(names::y(v), VarKind::Binary, 0.0, 1.0);
    }
    for v in 0..n {
        for c in levels() {
            b.add_var(names::z(v, c), VarKind::Binary, 0.0, 1.0);
        }
    }
    for v in 0..n {
        b.add_var(names::order(v), VarKind::Integer, 0.0, (n - 1) as f64);
    }
    for v in 0..n {
        b.add_var(names::count(v), VarKind::Integer, 0.0, f64::from(s_max));
    }
    for v in 0..n {
        b.add_var(names::load(v), VarKind::Continuous, 0.0, energy.l_max);
    }
    for v in 0..n {
        b.add_var(names::mass(v), VarKind::Continuous, 0.0, inf);
    }
    for ti in 0..m {
        for v in 0..n {
            b.add_var(names::estimator(ti, v), VarKind::Continuous, -inf, inf);
        }
    }
    for ti in 0..m {
        for v in 0..n {
            for c in levels() {
                b.add_var(names::estimator_level(ti, v, c), VarKind::Continuous, -inf, inf);
            }
        }
    }
    for e in &edges {
        b.add_var(names::transport(e.u, e.v), VarKind::Continuous, 0.0, inf);
    }

    let chi = |b: &Builder, e: &Edge| b.id(&names::chi(e.u, e.v));
    let incoming = |b: &Builder, v: usize, coef: f64| -> Vec<(usize, f64)> {
        edges.iter().filter(|e| e.v == v).map(|e| (chi(b, e), coef)).collect()
    };
    let outgoing = |b: &Builder, v: usize, coef: f64| -> Vec<(usize, f64)> {
        edges.iter().filter(|e| e.u == v).map(|e| (chi(b, e), coef)).collect()
    };
    let inner = |v: usize| v != s && v != t;

    // routing
    for v in (0..n).filter(|&v| inner(v)) {
        let mut terms = incoming(&b, v, 1.0);
        terms.extend(outgoing(&b, v, -1.0));
        b.row(ConstraintTag::FlowConservation, &v.to_string(), terms, Sense::Eq, 0.0);
        let terms = incoming(&b, v, 1.0);
        b.row(ConstraintTag::FlowCapacity, &v.to_string(), terms, Sense::Le, 1.0);
    }
    let terms = outgoing(&b, s, 1.0);
    b.row(ConstraintTag::StartOut, "", terms, Sense::Eq, 1.0);
    let terms = incoming(&b, t, 1.0);
    b.row(ConstraintTag::TargetIn, "", terms, Sense::Eq, 1.0);
    let terms = incoming(&b, s, 1.0);
    b.row(ConstraintTag::StartNoIn, "", terms, Sense::Eq, 0.0);
    let terms = outgoing(&b, t, 1.0);
    b.row(ConstraintTag::TargetNoOut, "", terms, Sense::Eq, 0.0);
    for v in 0..n {
        let yv = b.id(&names::y(v));
        if inner(v) {
            let mut terms = vec![(yv, 1.0)];
            terms.extend(incoming(&b, v, -1.0));
            b.row(ConstraintTag::VertexActivation, &v.to_string(), terms, Sense::Eq, 0.0);
        } else {
            b.row(
                ConstraintTag::VisitFixed,
                &v.to_string(),
                vec![(yv, 1.0)],
                Sense::Eq,
                1.0,
            );
        }
    }
    for ti in 0..m {
        for v in (0..n).filter(|&v| inner(v)) {
            let a = b.id(&names::estimator(ti, v));
            let yv = b.id(&names::y(v));
            let idx = format!("{ti}.{v}");
            b.row(
                ConstraintTag::EstimatorActivation,
                &format!("{idx}.hi"),
                vec![(a, 1.0), (yv, -a_max)],
                Sense::Le,
                0.0,
            );
            b.row(
                ConstraintTag::EstimatorActivation,
                &format!("{idx}.lo"),
                vec![(a, 1.0), (yv, a_max)],
                Sense::Ge,
                0.0,
            );
        }
    }

    // ordering
    let os = b.id(&names::order(s));
    b.row(ConstraintTag::OrderStart, "", vec![(os, 1.0)], Sense::Eq, 0.0);
    for v in 0..n {
        let ov = b.id(&names::order(v));
        b.row(
            ConstraintTag::OrderBounds,
            &format!("{v}.lo"),
            vec![(ov, 1.0)],
            Sense::Ge,
            0.0,
        );
        b.row(
            ConstraintTag::OrderBounds,
            &format!("{v}.hi"),
            vec![(ov, 1.0)],
            Sense::Le,
            (n - 1) as f64,
        );
    }
    for e in &edges {
        let (ou, ov, x) = (b.id(&names::order(e.u)), b.id(&names::order(e.v)), chi(&b, e));
        b.row(
            ConstraintTag::Mtz,
            &format!("{}.{}", e.u, e.v),
            vec![(ov, 1.0), (ou, -1.0), (x, -big_m_order)],
            Sense::Ge,
            1.0 - big_m_order,
        );
    }

    // load and mass
    let level_terms = |b: &Builder, v: usize, scale: f64| -> Vec<(usize, f64)> {
        levels()
            .map(|c| (b.id(&names::z(v, c)), scale * f64::from(c)))
            .collect()
    };
    let mut terms = vec![(b.id(&names::load(s)), 1.0)];
    terms.extend(level_terms(&b, s, -energy.lambda));
    b.row(ConstraintTag::LoadStart, "", terms, Sense::Eq, 0.0);
    for e in &edges {
        let mut terms = vec![(b.id(&names::load(e.v)), 1.0), (b.id(&names::load(e.u)), -1.0)];
        terms.extend(level_terms(&b, e.v, -energy.lambda));
        terms.push((chi(&b, e), -big_m_load));
        b.row(
            ConstraintTag::LoadPropagation,
            &format!("{}.{}", e.u, e.v),
            terms,
            Sense::Ge,
            -big_m_load,
        );
    }
    for v in 0..n {
        let ld = b.id(&names::load(v));
        b.row(
            ConstraintTag::LoadBounds,
            &format!("{v}.lo"),
            vec![(ld, 1.0)],
            Sense::Ge,
            0.0,
        );
        b.row(
            ConstraintTag::LoadBounds,
            &format!("{v}.hi"),
            vec![(ld, 1.0)],
            Sense::Le,
            energy.l_max,
        );
    }
    for v in 0..n {
        let terms = vec![(b.id(&names::mass(v)), 1.0), (b.id(&names::load(v)), -1.0)];
        b.row(
            ConstraintTag::RobotMass,
            &v.to_string(),
            terms,
            Sense::Eq,
            energy.base_mass,
        );
    }

    // sampling levels
    for v in 0..n {
        let mut terms = vec![(b.id(&names::count(v)), 1.0)];
        terms.extend(level_terms(&b, v, -1.0));
        b.row(ConstraintTag::SampleCount, &v.to_string(), terms, Sense::Eq, 0.0);
        let mut terms: Vec<_> = levels().map(|c| (b.id(&names::z(v, c)), 1.0)).collect();
        terms.push((b.id(&names::y(v)), -1.0));
        b.row(ConstraintTag::SamplingActivation, &v.to_string(), terms, Sense::Eq, 0.0);
    }
    for ti in 0..m {
        for v in 0..n {
            let mut terms = vec![(b.id(&names::estimator(ti, v)), 1.0)];
            terms.extend(levels().map(|c| (b.id(&names::estimator_level(ti, v, c)), -1.0)));
            b.row(
                ConstraintTag::EstimatorAggregation,
                &format!("{ti}.{v}"),
                terms,
                Sense::Eq,
                0.0,
            );
            for c in levels() {
                let a = b.id(&names::estimator_level(ti, v, c));
                let z = b.id(&names::z(v, c));
                let idx = format!("{ti}.{v}.{c}");
                b.row(
                    ConstraintTag::EstimatorLevelLink,
                    &format!("{idx}.hi"),
                    vec![(a, 1.0), (z, -a_max)],
                    Sense::Le,
                    0.0,
                );
                b.row(
                    ConstraintTag::EstimatorLevelLink,
                    &format!("{idx}.lo"),
                    vec![(a, 1.0), (z, a_max)],
                    Sense::Ge,
                    0.0,
                );
            }
        }
    }

    // linearised energy
    let terms = edges
        .iter()
        .map(|e| (b.id(&names::transport(e.u, e.v)), e.cost))
        .collect();
    b.row(ConstraintTag::EnergyBudget, "", terms, Sense::Le, energy.budget);
    for e in &edges {
        let tv = b.id(&names::transport(e.u, e.v));
        let ru = b.id(&names::mass(e.u));
        let x = chi(&b, e);
        let idx = format!("{}.{}", e.u, e.v);
        b.row(
            ConstraintTag::McCormickMass,
            &idx,
            vec![(tv, 1.0), (ru, -1.0)],
            Sense::Le,
            0.0,
        );
        b.row(
            ConstraintTag::McCormickSwitch,
            &idx,
            vec![(tv, 1.0), (x, -max_mass)],
            Sense::Le,
            0.0,
        );
        b.row(
            ConstraintTag::McCormickLower,
            &idx,
            vec![(tv, 1.0), (ru, -1.0), (x, -max_mass)],
            Sense::Ge,
            -max_mass,
        );
        b.row(ConstraintTag::McCormickNonneg, &idx, vec![(tv, 1.0)], Sense::Ge, 0.0);
    }
    if let Some(cap) = energy.distance_cap {
        let terms = edges.iter().map(|e| (chi(&b, e), e.cost)).collect();
        b.row(ConstraintTag::DistanceCap, "", terms, Sense::Le, cap);
    }

    // objective: per test point, a' K a + sum_c (sigma^2 / c) a_c^2 - 2 k' a + k_tt
    let mut objective = QuadObjective::default();
    let k_vv = eval.k_vv();
    let k_tv = eval.k_tv();
    let sigma2 = eval.noise_variance();
    for ti in 0..m {
        let w = eval.weights()[ti];
        if w == 0.0 {
            continue;
        }
        let ids: Vec<usize> = (0..n).map(|v| b.id(&names::estimator(ti, v))).collect();
        for v1 in 0..n {
            objective.quadratic.push((ids[v1], ids[v1], w * k_vv[(v1, v1)]));
            for v2 in (v1 + 1)..n {
                objective.quadratic.push((ids[v1], ids[v2], 2.0 * w * k_vv[(v1, v2)]));
            }
        }
        for v in 0..n {
            for c in levels() {
                let a = b.id(&names::estimator_level(ti, v, c));
                objective.quadratic.push((a, a, w * sigma2 / f64::from(c)));
            }
        }
        for v in 0..n {
            objective.linear.push((ids[v], -2.0 * w * k_tv[(ti, v)]));
        }
        objective.constant += w * eval.k_tt_diag()[ti];
    }

    let meta = ModelMeta {
        n,
        start: s,
        target: t,
        edges,
        test_count: m,
        lambda: energy.lambda,
        base_mass: energy.base_mass,
        s_max,
        l_max: energy.l_max,
        budget: energy.budget,
        distance_cap: energy.distance_cap,
        noise_variance: sigma2,
        a_max,
        big_m_order,
        big_m_load,
        max_mass,
    };
    MiqpModel::from_parts(b.variables, b.constraints, objective, meta)
}

#[cfg(test)]
mod tests;
