use serde::{Deserialize, Serialize};

use crate::error::{input_err, Result};
use crate::world::{EnergyParams, Plan};

/// Path-length overhead of a load-aware plan relative to a distance-budget
/// plan, against the worst-case ratio
/// `S_max (R0 + lambda p_D / 2) / (R0 + lambda p_E / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceBound {
    /// `D(P_E) / D(P_D)`.
    pub ratio: f64,
    pub bound: f64,
    /// `E(P_E) <= E(P_D)`.
    pub energy_premise: bool,
    /// `D(P_D) <= D(P_E)`.
    pub distance_premise: bool,
    /// Every vertex on either path takes at least one sample, so the mass
    /// after `j` vertices is at least `R0 + lambda j`.
    pub sampling_premise: bool,
    /// All three premises.
    pub assumptions_hold: bool,
    /// `ratio > bound`, whether or not the premises hold.
    pub exceeded: bool,
    /// `exceeded` while the premises hold.
    pub violation: bool,
}

/// Both plans' stored energies must be evaluated under `params`.
pub fn distance_bound(plan_e: &Plan, plan_d: &Plan, params: &EnergyParams) -> Result<DistanceBound> {
    if plan_d.distance <= 0.0 || !plan_d.distance.is_finite() {
        return input_err(format!("reference plan has non-positive distance {}", plan_d.distance));
    }
    let p_e = plan_e.len() as f64;
    let p_d = plan_d.len() as f64;
    let r0 = params.base_mass;
    let lambda = params.lambda;
    let ratio = plan_e.distance / plan_d.distance;
    let bound = f64::from(params.s_max) * (r0 + lambda * p_d / 2.0) / (r0 + lambda * p_e / 2.0);
    let energy_premise = plan_e.energy <= plan_d.energy + 1e-12;
    let distance_premise = plan_d.distance <= plan_e.distance + 1e-12;
    let sampling_premise = plan_e.steps.iter().chain(&plan_d.steps).all(|s| s.samples >= 1);
    let assumptions_hold = energy_premise && distance_premise && sampling_premise;
    let exceeded = ratio > bound + 1e-9;
    Ok(DistanceBound {
        ratio,
        bound,
        energy_premise,
        distance_premise,
        sampling_premise,
        assumptions_hold,
        exceeded,
        violation: assumptions_hold && exceeded,
    })
}
