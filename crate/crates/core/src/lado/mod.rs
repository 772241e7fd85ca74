//! Robust action sets and the per-agent LADO update.
//!
//! Each agent keeps running sums of its own cumulative cost and of the expert's
//! cumulative cost (spatial terms split by adaptive weights, one step delayed)
//! and at every step projects the ML action onto the set of actions for which
//! its own sum plus a reservation cost stays within `(1 + lambda)` times the
//! expert's sum.

mod ledger;
mod projection;

pub use ledger::{constraint_slack_from_history, AgentLedger, StepConstraint};
pub use projection::{project_to_robust_set, Projection, RobustSetHalfspaceData};

use serde::{Deserialize, Serialize};

use crate::costs::SmoothnessParams;
use crate::error::{LadoError, Result};
use crate::network::LocalObservation;

/// Slack tolerance for the per-step robustness constraint.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

/// Below this, both endpoints count as following their experts.
pub const SPLIT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum Lambda0Mode {
    Explicit(f64),
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessConfig {
    pub lambda: f64,
    pub lambda0: f64,
}

impl RobustnessConfig {
    pub fn new(lambda: f64, mode: Lambda0Mode) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(LadoError::InvalidArgument(format!("lambda must be positive, got {lambda}")));
        }
        let lambda0 = match mode {
            Lambda0Mode::Optimal => optimal_lambda0(lambda)?,
            Lambda0Mode::Explicit(l0) => {
                if !(l0 > 0.0 && l0 <= lambda) {
                    return Err(LadoError::InvalidArgument(format!(
                        "lambda0 must lie in (0, {lambda}], got {l0}"
                    )));
                }
                l0
            }
        };
        Ok(Self { lambda, lambda0 })
    }

    pub fn optimal(lambda: f64) -> Result<Self> {
        Self::new(lambda, Lambda0Mode::Optimal)
    }
}

/// `sqrt(1 + lambda) - 1`, the reservation hyperparameter that minimizes the
/// average-cost bound.
pub fn optimal_lambda0(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(LadoError::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    Ok((1.0 + lambda).sqrt() - 1.0)
}

/// Share of an edge's spatial cost attributed to the endpoint whose squared
/// deviation from its expert is `dist_sq_own`.
pub fn splitting_weight(dist_sq_own: f64, dist_sq_other: f64) -> Result<f64> {
    if !(dist_sq_own >= 0.0) || !(dist_sq_other >= 0.0) {
        return Err(LadoError::InvalidArgument(format!(
            "squared distances must be non-negative, got ({dist_sq_own}, {dist_sq_other})"
        )));
    }
    if dist_sq_own < SPLIT_EPSILON && dist_sq_other < SPLIT_EPSILON {
        return Ok(0.5);
    }
    Ok(dist_sq_own / (dist_sq_own + dist_sq_other))
}

/// Weights `(kappa_first, kappa_second)` for an edge, summing to one exactly
/// up to the rounding of `1 - kappa_first`.
pub fn edge_split(dist_sq_first: f64, dist_sq_second: f64) -> Result<(f64, f64)> {
    let k = splitting_weight(dist_sq_first, dist_sq_second)?;
    Ok((k, 1.0 - k))
}

/// Coefficient of `|x - x_expert|^2` in the reservation cost.
pub fn reservation_coefficient(
    temporal_smoothness: f64,
    spatial_smoothness: f64,
    degree: usize,
    lambda0: f64,
) -> Result<f64> {
    if !(lambda0 > 0.0) {
        return Err(LadoError::InvalidArgument(format!("lambda0 must be positive, got {lambda0}")));
    }
    Ok(0.5 * (temporal_smoothness + spatial_smoothness * degree as f64) * (1.0 + 1.0 / lambda0))
}

pub fn reservation_cost(
    dist_sq: f64,
    temporal_smoothness: f64,
    spatial_smoothness: f64,
    degree: usize,
    lambda0: f64,
) -> Result<f64> {
    Ok(reservation_coefficient(temporal_smoothness, spatial_smoothness, degree, lambda0)? * dist_sq)
}

/// Squared radius of the ball around the expert action that is guaranteed to
/// lie inside the robust set, given the expert's node plus temporal cost at
/// this step.
pub fn sufficient_ball_radius_sq(
    expert_step_cost: f64,
    smooth: &SmoothnessParams,
    degree: usize,
    lambda: f64,
    lambda0: f64,
) -> f64 {
    let scale = smooth.combined(degree);
    if !(scale > 0.0) {
        return f64::INFINITY;
    }
    ((lambda - lambda0) / (1.0 + 1.0 / lambda0)) * (2.0 / scale) * expert_step_cost
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadoStep {
    pub action: Vec<f64>,
    pub slack: f64,
    pub projected: bool,
}

/// One step of LADO for one agent: builds the robust set from the ledger and
/// the delayed observation, projects the ML action onto it and commits the
/// chosen action to the ledger.
pub fn lado_step(
    ledger: &mut AgentLedger,
    obs: &LocalObservation<'_>,
    ml_action: &[f64],
    expert_action: &[f64],
    smooth: &SmoothnessParams,
    config: &RobustnessConfig,
) -> Result<LadoStep> {
    let step = ledger.prepare(obs, expert_action, smooth, config)?;
    let set = step.robust_set();
    let (action, projected) = match project_to_robust_set(ml_action, &set) {
        Ok(p) => {
            let projected = p.multiplier > 0.0;
            (p.point, projected)
        }
        Err(LadoError::InvalidArgument(_)) => (expert_action.to_vec(), true),
        Err(e) => return Err(e),
    };
    let mut slack = step.slack(&action);
    let (action, slack) = if slack > FEASIBILITY_TOLERANCE {
        // Rounding left the projection marginally outside; the expert action is
        // always admissible.
        let expert_slack = step.slack(expert_action);
        if expert_slack > FEASIBILITY_TOLERANCE {
            return Err(LadoError::EmptyRobustSet {
                agent: obs.agent,
                t: obs.t,
                slack: expert_slack,
            });
        }
        slack = expert_slack;
        (expert_action.to_vec(), slack)
    } else {
        (action, slack)
    };
    ledger.commit(&step, &action);
    Ok(LadoStep { action, slack, projected })
}
