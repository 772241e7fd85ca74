use log::warn;

use crate::bounds::{bound_blackbox, BoundInputs};
use crate::error::{LadoError, Result};

use super::run::{lado_name, BatchReport, ROBUSTNESS_TOLERANCE};

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyMetrics {
    pub policy: String,
    pub avg: f64,
    /// Worst ratio to OPT; absent without OPT or when every OPT cost is zero.
    pub cr: Option<f64>,
    /// Episodes left out of CR because OPT cost zero.
    pub cr_excluded: usize,
}

/// AVG and CR of every policy in the batch.
pub fn metrics(batch: &BatchReport) -> Result<Vec<PolicyMetrics>> {
    if batch.episodes.is_empty() {
        return Err(LadoError::InvalidArgument("metrics need a non-empty batch".into()));
    }
    let has_opt = batch.policies.iter().any(|p| p == "OPT");
    let n = batch.episodes.len() as f64;
    batch
        .policies
        .iter()
        .map(|policy| {
            let mut sum = 0.0;
            let mut cr: Option<f64> = None;
            let mut excluded = 0;
            for ep in &batch.episodes {
                let cost = ep.cost(policy).ok_or_else(|| {
                    LadoError::InvalidArgument(format!("episode {} lacks policy {policy}", ep.episode))
                })?;
                sum += cost;
                if has_opt {
                    let opt = ep.cost("OPT").expect("OPT in every episode");
                    if opt > 0.0 {
                        let r = cost / opt;
                        cr = Some(cr.map_or(r, |c| c.max(r)));
                    } else {
                        excluded += 1;
                    }
                }
            }
            if excluded > 0 {
                warn!("{policy}: {excluded} episodes with zero OPT cost excluded from CR");
            }
            Ok(PolicyMetrics { policy: policy.clone(), avg: sum / n, cr, cr_excluded: excluded })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditSummary {
    pub lambda: f64,
    pub episodes: usize,
    /// Largest `cost(LADO) / cost(Expert)`.
    pub max_ratio: f64,
    /// Episodes with `cost(LADO) > (1 + lambda) cost(Expert) + 1e-6`.
    pub ratio_violations: usize,
    /// Per-step constraint slacks beyond the feasibility tolerance.
    pub slack_violations: usize,
    pub worst_slack: f64,
}

impl AuditSummary {
    pub fn passed(&self) -> bool {
        self.ratio_violations == 0 && self.slack_violations == 0
    }
}

pub fn audit_robustness(batch: &BatchReport, lambda: f64) -> Result<AuditSummary> {
    let mut summary = AuditSummary {
        lambda,
        episodes: 0,
        max_ratio: 0.0,
        ratio_violations: 0,
        slack_violations: 0,
        worst_slack: f64::NEG_INFINITY,
    };
    for ep in &batch.episodes {
        let report = ep.lado.iter().find(|r| r.lambda == lambda).ok_or_else(|| {
            LadoError::InvalidArgument(format!("episode {} has no LADO run for lambda {lambda}", ep.episode))
        })?;
        let expert = ep.cost("Expert").expect("expert runs in every episode");
        summary.episodes += 1;
        summary.max_ratio = summary.max_ratio.max(report.ratio);
        if report.cost > (1.0 + lambda) * expert + ROBUSTNESS_TOLERANCE {
            summary.ratio_violations += 1;
        }
        summary.slack_violations += report.violations;
        summary.worst_slack = summary.worst_slack.max(report.max_slack);
    }
    Ok(summary)
}

/// Measured LADO average next to the black-box bound estimated on the same batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchBound {
    pub lambda: f64,
    pub avg_lado: f64,
    pub avg_expert: f64,
    pub avg_ml: f64,
    pub omega: f64,
    pub scale: f64,
    pub bound: f64,
}

impl BatchBound {
    pub fn holds(&self) -> bool {
        self.avg_lado <= self.bound + ROBUSTNESS_TOLERANCE
    }
}

/// Needs the ML policy in the roster.
pub fn batch_bounds(batch: &BatchReport) -> Result<Vec<BatchBound>> {
    let ms = metrics(batch)?;
    let avg = |name: &str| {
        ms.iter()
            .find(|m| m.policy == name)
            .map(|m| m.avg)
            .ok_or_else(|| LadoError::InvalidArgument(format!("batch has no {name} policy")))
    };
    let avg_expert = avg("Expert")?;
    let avg_ml = avg("ML")?;
    let n = batch.episodes.len() as f64;
    let scale = batch.episodes.iter().map(|e| e.scale).fold(0.0, f64::max);
    batch
        .lambdas
        .iter()
        .map(|&lambda| {
            let omega = batch
                .episodes
                .iter()
                .map(|e| e.lado.iter().find(|r| r.lambda == lambda).map_or(0.0, |r| r.omega))
                .sum::<f64>()
                / n;
            let inputs = BoundInputs { avg_expert, avg_ml, scale, omega };
            Ok(BatchBound {
                lambda,
                avg_lado: avg(&lado_name(lambda))?,
                avg_expert,
                avg_ml,
                omega,
                scale,
                bound: bound_blackbox(&inputs, lambda)?,
            })
        })
        .collect()
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// `[min, q25, median, q75, max]`
pub fn five_number_summary(values: &[f64]) -> [f64; 5] {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    [0.0, 0.25, 0.5, 0.75, 1.0].map(|q| quantile(&sorted, q))
}
