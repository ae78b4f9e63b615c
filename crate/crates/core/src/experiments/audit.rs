use serde::{Deserialize, Serialize};

use super::metrics::MetricsRow;

/// Tally of the distance-overhead bound over every row that carries bound
/// fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundAudit {
    pub rows_audited: usize,
    pub premises_hold: usize,
    pub violations: usize,
    /// Rows above the bound whose premises fail; reported, not violations.
    pub exceeded_outside_premises: usize,
    /// Largest `ratio / bound` among premise-holding rows.
    pub max_quotient: Option<f64>,
    /// Premise-holding rows whose two paths have the same vertex count.
    pub equal_length_rows: usize,
    /// Of those, rows with `ratio > S_max`.
    pub equal_length_violations: usize,
    pub lambda_zero_rows: usize,
    /// Lambda-zero rows whose bound is not exactly `S_max`.
    pub lambda_zero_mismatches: usize,
    /// `(seed, lambda, kappa)` of every violating row.
    pub violating: Vec<(u64, f64, Option<f64>)>,
}

impl BoundAudit {
    pub fn clean(&self) -> bool {
        self.violations == 0 && self.equal_length_violations == 0 && self.lambda_zero_mismatches == 0
    }
}

pub fn bound_audit(rows: &[MetricsRow], s_max: u32) -> BoundAudit {
    let s_max = f64::from(s_max);
    let mut audit = BoundAudit {
        rows_audited: 0,
        premises_hold: 0,
        violations: 0,
        exceeded_outside_premises: 0,
        max_quotient: None,
        equal_length_rows: 0,
        equal_length_violations: 0,
        lambda_zero_rows: 0,
        lambda_zero_mismatches: 0,
        violating: Vec::new(),
    };
    for r in rows {
        let (Some(ratio), Some(bound), Some(premises), Some(violation)) =
            (r.bound_ratio, r.bound_value, r.bound_premises, r.bound_violation)
        else {
            continue;
        };
        audit.rows_audited += 1;
        if r.lambda == 0.0 {
            audit.lambda_zero_rows += 1;
            if bound != s_max {
                audit.lambda_zero_mismatches += 1;
            }
        }
        if !premises {
            if r.bound_exceeded == Some(true) {
                audit.exceeded_outside_premises += 1;
            }
            continue;
        }
        audit.premises_hold += 1;
        let q = ratio / bound;
        audit.max_quotient = Some(audit.max_quotient.map_or(q, |m: f64| m.max(q)));
        if violation {
            audit.violations += 1;
            audit.violating.push((r.seed, r.lambda, r.kappa));
        }
        if r.path_len.is_some() && r.path_len == r.reference_path_len {
            audit.equal_length_rows += 1;
            if ratio > s_max + 1e-9 {
                audit.equal_length_violations += 1;
            }
        }
    }
    audit
}
