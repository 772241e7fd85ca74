//! Average-cost bounds for LADO and their empirical ingredients.

use serde::{Deserialize, Serialize};

use crate::costs::{QuadraticCostInstance, SmoothnessParams};
use crate::error::{LadoError, Result};
use crate::lado::optimal_lambda0;
use crate::trajectory::Trajectory;
use crate::vector::dist_sq;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub avg_expert: f64,
    /// Average cost of the ML policy the bound is about.
    pub avg_ml: f64,
    /// `(l_f + 2 l_T + D l_S) / 2` with `D` the maximum degree.
    pub scale: f64,
    pub omega: f64,
}

impl BoundInputs {
    fn validate(&self) -> Result<()> {
        let fields = [self.avg_expert, self.avg_ml, self.scale, self.omega];
        if fields.iter().any(|x| x.is_nan() || *x < 0.0) {
            return Err(LadoError::InvalidArgument(format!("bound inputs must be non-negative: {self:?}")));
        }
        Ok(())
    }
}

/// `(l_f + 2 l_T + D l_S) / 2`
pub fn bound_scale(smooth: &SmoothnessParams, max_degree: usize) -> f64 {
    0.5 * smooth.combined(max_degree)
}

/// Average-cost bound for LADO with a black-box ML policy.
pub fn bound_blackbox(inputs: &BoundInputs, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    inputs.validate()?;
    let robust = (1.0 + lambda) * inputs.avg_expert;
    let consistent = (inputs.avg_ml.sqrt() + (inputs.scale * inputs.omega).sqrt()).powi(2);
    Ok(robust.min(consistent))
}

/// Mixing weight between the expert and a projection-unaware ML policy that
/// keeps every step feasible.
///
/// `denominator` is `l_T + l_f + D l_S`.
pub fn alpha_lambda(lambda: f64, c_hat: f64, denominator: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if c_hat.is_nan() || c_hat < 0.0 {
        return Err(LadoError::InvalidArgument(format!("C-hat must be non-negative, got {c_hat}")));
    }
    if !(denominator > 0.0) {
        return Ok(1.0);
    }
    let l0 = optimal_lambda0(lambda)?;
    Ok((l0 * (2.0 * c_hat / denominator).sqrt()).min(1.0))
}

/// Average-cost bound for LADO with an ML policy trained through the projection.
///
/// `inputs.avg_ml` and `inputs.omega` refer to the projection-unaware policy.
pub fn bound_aware(inputs: &BoundInputs, lambda: f64, alpha: f64) -> Result<f64> {
    inputs.validate()?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(LadoError::InvalidArgument(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let mixed = (1.0 - alpha) * inputs.avg_expert + alpha * inputs.avg_ml;
    let consistent = (inputs.avg_ml.sqrt() + (inputs.scale * inputs.omega).sqrt()).powi(2);
    check_lambda(lambda)?;
    Ok(mixed.min(consistent))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(LadoError::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

/// Expert and ML trajectories of one episode.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeTracks<'a> {
    pub instance: &'a QuadraticCostInstance,
    pub smoothness: &'a SmoothnessParams,
    pub expert: &'a Trajectory,
    pub ml: &'a Trajectory,
}

/// One clamped term of Omega.
pub fn omega_term(dist_sq: f64, expert_step_cost: f64, lambda0: f64, combined_smoothness: f64) -> f64 {
    let subtrahend = if combined_smoothness > 0.0 {
        2.0 * lambda0 * lambda0 / combined_smoothness * expert_step_cost
    } else {
        f64::INFINITY
    };
    (dist_sq - subtrahend).max(0.0)
}

/// Sample mean over the batch of `sum_v sum_t [|x~ - x^expert|^2 - c cost^expert_{v,t}]^+`.
///
/// `cost^expert_{v,t}` is the expert's node plus temporal cost, and each
/// episode uses its own smoothness constants and per-agent degrees.
pub fn omega_empirical(batch: &[EpisodeTracks<'_>], lambda: f64) -> Result<f64> {
    if batch.is_empty() {
        return Err(LadoError::InvalidArgument("omega needs a non-empty batch".into()));
    }
    let l0 = optimal_lambda0(lambda)?;
    let mut total = 0.0;
    for ep in batch {
        let inst = ep.instance;
        for v in 0..inst.agent_count() {
            let combined = ep.smoothness.combined(inst.network.degree(v));
            for t in 1..=inst.horizon {
                let d = dist_sq(ep.ml.get(v, t), ep.expert.get(v, t));
                total += omega_term(d, inst.own_cost(ep.expert, v, t), l0, combined);
            }
        }
    }
    Ok(total / batch.len() as f64)
}

/// Largest `(l_f + 2 l_T + D l_S) / 2` across the batch.
pub fn batch_scale(batch: &[EpisodeTracks<'_>]) -> f64 {
    batch
        .iter()
        .map(|ep| bound_scale(ep.smoothness, ep.instance.network.max_degree()))
        .fold(0.0, f64::max)
}

/// Minimum over episodes, agents and prefixes of the expert's cumulative node
/// plus temporal cost divided by the cumulative squared ML-expert distance.
/// Prefixes with zero distance are skipped.
pub fn c_hat_empirical(batch: &[EpisodeTracks<'_>]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for ep in batch {
        let inst = ep.instance;
        for v in 0..inst.agent_count() {
            let mut cost = 0.0;
            let mut dist = 0.0;
            for t in 1..=inst.horizon {
                cost += inst.own_cost(ep.expert, v, t);
                dist += dist_sq(ep.expert.get(v, t), ep.ml.get(v, t));
                if dist > 0.0 {
                    best = best.min(cost / dist);
                }
            }
        }
    }
    if best.is_infinite() {
        return Err(LadoError::InvalidArgument(
            "ML actions coincide with the expert everywhere; C-hat is undefined".into(),
        ));
    }
    Ok(best)
}

/// Named `(lambda, bound)` series.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Stylized bound setting where every squared ML-expert distance is `ratio`
/// times the expert's step cost, so that `Omega = avg_expert * [ratio - 2 lambda0^2 / L]^+`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StylizedBoundSetting {
    pub avg_expert: f64,
    pub avg_ml: f64,
    pub scale: f64,
    pub ratio: f64,
}

impl StylizedBoundSetting {
    pub fn omega(&self, lambda: f64) -> Result<f64> {
        let l0 = optimal_lambda0(lambda)?;
        Ok(self.avg_expert * (self.ratio - l0 * l0 / self.scale).max(0.0))
    }

    pub fn inputs(&self, lambda: f64) -> Result<BoundInputs> {
        Ok(BoundInputs {
            avg_expert: self.avg_expert,
            avg_ml: self.avg_ml,
            scale: self.scale,
            omega: self.omega(lambda)?,
        })
    }

    pub fn blackbox(&self, lambda: f64) -> Result<f64> {
        bound_blackbox(&self.inputs(lambda)?, lambda)
    }

    /// `c_hat_ratio` is the distance-to-cost ratio bounding C-hat from below.
    pub fn aware(&self, lambda: f64, c_hat_ratio: f64) -> Result<f64> {
        let c_hat = if c_hat_ratio > 0.0 { 1.0 / c_hat_ratio } else { f64::INFINITY };
        let alpha = alpha_lambda(lambda, c_hat, 2.0 * self.scale)?;
        bound_aware(&self.inputs(lambda)?, lambda, alpha)
    }
}

pub fn default_lambda_grid() -> Vec<f64> {
    (1..=300).map(|k| k as f64 / 100.0).collect()
}

/// Illustrative bound curves for a well-trained and a poorly-trained ML policy.
///
/// The illustration's parameters come in two versions that differ only in the
/// C-hat ratio of the well-trained policy (0.6 and 0.48); both are emitted.
pub fn illustration_curves(lambdas: &[f64]) -> Result<Vec<BoundCurve>> {
    let good = StylizedBoundSetting { avg_expert: 2.5, avg_ml: 1.0, scale: 1.0, ratio: 0.6 };
    let poor = StylizedBoundSetting { avg_expert: 2.5, avg_ml: 4.0, scale: 1.0, ratio: 0.7 };
    let mut curves = Vec::new();
    let mut push = |name: &str, f: &dyn Fn(f64) -> Result<f64>| -> Result<()> {
        let points = lambdas.iter().map(|&l| Ok((l, f(l)?))).collect::<Result<Vec<_>>>()?;
        curves.push(BoundCurve { name: name.into(), points });
        Ok(())
    };
    push("expert", &|l| Ok((1.0 + l) * good.avg_expert))?;
    push("blackbox_well_trained", &|l| good.blackbox(l))?;
    push("aware_well_trained", &|l| good.aware(l, 0.6))?;
    push("aware_well_trained_alt", &|l| good.aware(l, 0.48))?;
    push("blackbox_poorly_trained", &|l| poor.blackbox(l))?;
    push("aware_poorly_trained", &|l| poor.aware(l, 0.7))?;
    Ok(curves)
}
