use crate::costs::{NodeCost, QuadraticCostInstance, SmoothnessParams};
use crate::error::{LadoError, Result};
use crate::network::LocalObservation;
use crate::trajectory::Trajectory;
use crate::vector::dist_sq;

use super::{edge_split, reservation_coefficient, RobustSetHalfspaceData, RobustnessConfig};

/// Running sums of one agent's robustness constraint.
///
/// After committing step `t`:
/// * `own_total` is the agent's node and temporal cost through `t` plus its
///   weighted spatial cost through `t - 1`;
/// * `expert_total` is the same quantity evaluated on the expert actions.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentLedger {
    agent: usize,
    steps: usize,
    own_total: f64,
    expert_total: f64,
    last_dist_sq: f64,
}

/// Everything needed to evaluate the step-`t` constraint as a function of `x_t`.
#[derive(Debug, Clone)]
pub struct StepConstraint {
    pub agent: usize,
    pub t: usize,
    /// Own cost carried into step `t`, including step `t-1` spatial terms.
    pub carried_own: f64,
    /// Expert cost through step `t`, including step `t-1` spatial terms.
    pub carried_expert: f64,
    pub lambda: f64,
    pub node: NodeCost,
    /// `M x_{t-1}` of the temporal cost.
    pub temporal_anchor: Vec<f64>,
    pub temporal_weight: f64,
    pub reservation: f64,
    pub expert_action: Vec<f64>,
}

impl StepConstraint {
    /// Cost terms of step `t` that depend on `x`.
    pub fn own_step_cost(&self, x: &[f64]) -> f64 {
        self.node.eval(x) + self.temporal_weight * dist_sq(x, &self.temporal_anchor)
    }

    /// Left-hand side minus right-hand side of the step-`t` constraint.
    pub fn slack(&self, x: &[f64]) -> f64 {
        let lhs = self.carried_own
            + self.own_step_cost(x)
            + self.reservation * dist_sq(x, &self.expert_action);
        lhs - (1.0 + self.lambda) * self.carried_expert
    }

    pub fn robust_set(&self) -> RobustSetHalfspaceData {
        let bound = (1.0 + self.lambda) * self.carried_expert - self.carried_own;
        RobustSetHalfspaceData::from_squared_terms(
            &[
                (self.node.weight, &self.node.target),
                (self.temporal_weight, &self.temporal_anchor),
                (self.reservation, &self.expert_action),
            ],
            &self.expert_action,
            bound,
        )
    }
}

impl AgentLedger {
    pub fn new(agent: usize) -> Self {
        Self {
            agent,
            steps: 0,
            own_total: 0.0,
            expert_total: 0.0,
            last_dist_sq: 0.0,
        }
    }

    pub fn agent(&self) -> usize {
        self.agent
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn own_total(&self) -> f64 {
        self.own_total
    }

    pub fn expert_total(&self) -> f64 {
        self.expert_total
    }

    pub fn last_dist_sq(&self) -> f64 {
        self.last_dist_sq
    }

    /// Shifts the recorded own cost. Only for fault-injection tests of the auditor.
    #[doc(hidden)]
    pub fn tamper_own_total(&mut self, delta: f64) {
        self.own_total += delta;
    }

    /// Builds the step-`t` constraint from the delayed observation.
    pub fn prepare(
        &self,
        obs: &LocalObservation<'_>,
        expert_action: &[f64],
        smooth: &SmoothnessParams,
        config: &RobustnessConfig,
    ) -> Result<StepConstraint> {
        let t = obs.t;
        if obs.agent != self.agent {
            return Err(LadoError::InvalidArgument(format!(
                "ledger of agent {} given an observation of agent {}",
                self.agent, obs.agent
            )));
        }
        if self.steps + 1 != t {
            return Err(LadoError::InvalidArgument(format!(
                "ledger of agent {} is at step {}, cannot prepare step {t}",
                self.agent, self.steps
            )));
        }
        let prev = obs.own_actual.last().expect("step 0 is always observed");
        let prev_expert = obs.own_expert.last().expect("step 0 is always observed");

        let mut carried_own = self.own_total;
        let mut carried_expert = self.expert_total;
        if t >= 2 {
            let own_dev = dist_sq(prev, prev_expert);
            for nb in &obs.neighbors {
                let s = &nb.spatial[t - 2];
                let nb_prev = nb.actual.last().expect("neighbor history through t-1");
                let nb_prev_expert = nb.expert.last().expect("neighbor history through t-1");
                let nb_dev = dist_sq(nb_prev, nb_prev_expert);
                let kappa = if nb.observer_is_first {
                    edge_split(own_dev, nb_dev)?.0
                } else {
                    edge_split(nb_dev, own_dev)?.1
                };
                carried_own += kappa * s.eval_oriented(prev, nb_prev, nb.observer_is_first);
                carried_expert +=
                    kappa * s.eval_oriented(prev_expert, nb_prev_expert, nb.observer_is_first);
            }
        }
        let node = obs.node_now();
        let temporal = obs.temporal_now();
        carried_expert += node.eval(expert_action) + temporal.eval(expert_action, prev_expert);

        Ok(StepConstraint {
            agent: self.agent,
            t,
            carried_own,
            carried_expert,
            lambda: config.lambda,
            node: node.clone(),
            temporal_anchor: temporal.anchor(prev),
            temporal_weight: temporal.weight,
            reservation: reservation_coefficient(
                smooth.temporal,
                smooth.spatial,
                obs.degree(),
                config.lambda0,
            )?,
            expert_action: expert_action.to_vec(),
        })
    }

    pub fn commit(&mut self, step: &StepConstraint, action: &[f64]) {
        debug_assert_eq!(step.t, self.steps + 1);
        self.own_total = step.carried_own + step.own_step_cost(action);
        self.expert_total = step.carried_expert;
        self.last_dist_sq = dist_sq(action, &step.expert_action);
        self.steps = step.t;
    }
}

/// Slack of agent `v`'s step-`t` constraint recomputed from full trajectories,
/// without any running sums.
pub fn constraint_slack_from_history(
    instance: &QuadraticCostInstance,
    actual: &Trajectory,
    expert: &Trajectory,
    v: usize,
    t: usize,
    smooth: &SmoothnessParams,
    config: &RobustnessConfig,
) -> Result<f64> {
    if t == 0 || t > instance.horizon {
        return Err(LadoError::StepOutOfRange { t, horizon: instance.horizon });
    }
    let net = &instance.network;
    let mut own = 0.0;
    let mut exp = 0.0;
    for tau in 1..=t {
        own += instance.own_cost(actual, v, tau);
        exp += instance.own_cost(expert, v, tau);
    }
    for tau in 1..t {
        for inc in net.incident(v) {
            let edge = net.edges()[inc.edge];
            let dev_a = dist_sq(actual.get(edge.a, tau), expert.get(edge.a, tau));
            let dev_b = dist_sq(actual.get(edge.b, tau), expert.get(edge.b, tau));
            let (ka, kb) = edge_split(dev_a, dev_b)?;
            let kappa = if edge.a == v { ka } else { kb };
            own += kappa * instance.spatial_cost(actual, inc.edge, tau);
            exp += kappa * instance.spatial_cost(expert, inc.edge, tau);
        }
    }
    let rho = reservation_coefficient(smooth.temporal, smooth.spatial, net.degree(v), config.lambda0)?;
    own += rho * dist_sq(actual.get(v, t), expert.get(v, t));
    Ok(own - (1.0 + config.lambda) * exp)
}
