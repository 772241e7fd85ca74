//! Episode simulation with one-step-delayed neighbor information.
//!
//! Agents are processed one after another inside a step, but each agent only
//! sees trajectory prefixes that end at `t - 1`, so the processing order
//! cannot influence the result.

use crate::costs::{QuadraticCostInstance, SmoothnessParams};
use crate::error::{LadoError, Result};
use crate::lado::{constraint_slack_from_history, lado_step, AgentLedger, RobustnessConfig};
use crate::network::{LocalObservation, NeighborObservation};
use crate::policies::Policy;
use crate::trajectory::Trajectory;

/// Actions produced so far in one episode.
#[derive(Debug, Clone)]
pub struct EpisodeState<'a> {
    instance: &'a QuadraticCostInstance,
    pub actual: Trajectory,
    pub expert: Trajectory,
    pub advice: Trajectory,
    completed: usize,
}

impl<'a> EpisodeState<'a> {
    pub fn new(instance: &'a QuadraticCostInstance) -> Self {
        let base = instance.empty_trajectory();
        Self {
            instance,
            actual: base.clone(),
            expert: base.clone(),
            advice: base,
            completed: 0,
        }
    }

    pub fn instance(&self) -> &'a QuadraticCostInstance {
        self.instance
    }

    pub fn completed_steps(&self) -> usize {
        self.completed
    }

    /// Declares steps `1..=t` final. Only for driving policies by hand.
    #[doc(hidden)]
    pub fn mark_completed(&mut self, t: usize) {
        self.completed = t;
    }

    /// Information available to `agent` when choosing its step-`t` action.
    pub fn observe(&self, agent: usize, t: usize) -> Result<LocalObservation<'_>> {
        let inst = self.instance;
        if t == 0 || t > inst.horizon {
            return Err(LadoError::StepOutOfRange { t, horizon: inst.horizon });
        }
        if self.completed + 1 < t {
            return Err(LadoError::InvalidArgument(format!(
                "episode simulated through step {}, cannot observe step {t}",
                self.completed
            )));
        }
        if agent >= inst.agent_count() {
            return Err(LadoError::InvalidArgument(format!("agent {agent} does not exist")));
        }
        let net = &inst.network;
        let neighbors = net
            .incident(agent)
            .iter()
            .map(|inc| NeighborObservation {
                neighbor: inc.neighbor,
                edge: inc.edge,
                observer_is_first: net.edges()[inc.edge].a == agent,
                spatial: &inst.spatial[inc.edge][..t - 1],
                actual: self.actual.prefix(inc.neighbor, t),
                expert: self.expert.prefix(inc.neighbor, t),
            })
            .collect();
        Ok(LocalObservation {
            agent,
            t,
            dim: inst.dim(),
            node: &inst.node[agent][..t],
            temporal: &inst.temporal[agent][..t],
            own_actual: self.actual.prefix(agent, t),
            own_expert: self.expert.prefix(agent, t),
            own_ml: self.advice.prefix(agent, t),
            neighbors,
        })
    }
}

/// How the actual action is chosen from the expert and advice actions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Combiner {
    FollowExpert,
    FollowAdvice,
    Lado {
        config: RobustnessConfig,
        smoothness: SmoothnessParams,
    },
}

/// Shifts one agent's recorded own cost right before it prepares a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerTamper {
    pub agent: usize,
    pub step: usize,
    pub own_offset: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SimOptions {
    /// Processing order of agents within a step; defaults to `0..V`.
    pub agent_order: Option<Vec<usize>>,
    /// Recompute every constraint from scratch and compare with the ledger.
    pub verify_ledger: bool,
    /// Fault injection for auditor tests.
    pub tamper: Option<LedgerTamper>,
}

#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub actual: Trajectory,
    pub expert: Trajectory,
    pub advice: Trajectory,
    /// Ledger slack `slack[v][t - 1]` after each LADO step.
    pub slacks: Option<Vec<Vec<f64>>>,
    /// Number of steps where the advice had to be moved.
    pub projections: usize,
}

/// Runs one episode.
///
/// Without an advice policy the advice track mirrors the expert.
pub fn simulate(
    instance: &QuadraticCostInstance,
    expert: &dyn Policy,
    advice: Option<&dyn Policy>,
    combiner: Combiner,
    options: &SimOptions,
) -> Result<EpisodeOutcome> {
    instance.validate()?;
    let v_count = instance.agent_count();
    let order: Vec<usize> = match &options.agent_order {
        Some(order) => {
            let mut sorted = order.clone();
            sorted.sort_unstable();
            if sorted != (0..v_count).collect::<Vec<_>>() {
                return Err(LadoError::InvalidArgument("agent order must be a permutation".into()));
            }
            order.clone()
        }
        None => (0..v_count).collect(),
    };
    if advice.is_none() && combiner != Combiner::FollowExpert {
        return Err(LadoError::InvalidArgument("this combiner needs an advice policy".into()));
    }

    let mut state = EpisodeState::new(instance);
    let mut ledgers: Vec<AgentLedger> = (0..v_count).map(AgentLedger::new).collect();
    let lado = matches!(combiner, Combiner::Lado { .. });
    let mut slacks = lado.then(|| vec![vec![0.0; instance.horizon]; v_count]);
    let mut projections = 0;

    for t in 1..=instance.horizon {
        let mut chosen = vec![(Vec::new(), Vec::new(), Vec::new()); v_count];
        for &v in &order {
            if let Some(tamper) = options.tamper {
                if tamper.agent == v && tamper.step == t {
                    ledgers[v].tamper_own_total(tamper.own_offset);
                }
            }
            let obs = state.observe(v, t)?;
            let x_expert = expert.act(&obs)?;
            let x_advice = match advice {
                Some(p) => p.act(&obs)?,
                None => x_expert.clone(),
            };
            check_action(&x_expert, instance.dim(), v, t)?;
            check_action(&x_advice, instance.dim(), v, t)?;
            let x = match combiner {
                Combiner::FollowExpert => x_expert.clone(),
                Combiner::FollowAdvice => x_advice.clone(),
                Combiner::Lado { config, smoothness } => {
                    let step = lado_step(&mut ledgers[v], &obs, &x_advice, &x_expert, &smoothness, &config)?;
                    if step.projected {
                        projections += 1;
                    }
                    if let Some(s) = slacks.as_mut() {
                        s[v][t - 1] = step.slack;
                    }
                    step.action
                }
            };
            chosen[v] = (x, x_expert, x_advice);
        }
        for (v, (x, x_expert, x_advice)) in chosen.into_iter().enumerate() {
            state.actual.set(v, t, &x);
            state.expert.set(v, t, &x_expert);
            state.advice.set(v, t, &x_advice);
        }
        state.completed = t;

        if let (true, Combiner::Lado { config, smoothness }) = (options.verify_ledger, combiner) {
            let recorded = slacks.as_ref().expect("lado run records slacks");
            for v in 0..v_count {
                let direct = constraint_slack_from_history(
                    instance,
                    &state.actual,
                    &state.expert,
                    v,
                    t,
                    &smoothness,
                    &config,
                )?;
                let scale = 1.0 + ledgers[v].expert_total().abs() * (1.0 + config.lambda);
                if (direct - recorded[v][t - 1]).abs() > 1e-9 * scale {
                    return Err(LadoError::InvalidArgument(format!(
                        "ledger of agent {v} disagrees with recomputation at step {t}: {} vs {direct}",
                        recorded[v][t - 1]
                    )));
                }
            }
        }
    }

    Ok(EpisodeOutcome {
        actual: state.actual,
        expert: state.expert,
        advice: state.advice,
        slacks,
        projections,
    })
}

fn check_action(x: &[f64], dim: usize, v: usize, t: usize) -> Result<()> {
    if x.len() != dim || x.iter().any(|xi| !xi.is_finite()) {
        return Err(LadoError::InvalidArgument(format!(
            "policy returned a malformed action for agent {v} at step {t}"
        )));
    }
    Ok(())
}
