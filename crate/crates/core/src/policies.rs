//! Expert and baseline policies, ML advice sources and prediction files.
//!
//! Every policy maps a [`LocalObservation`] to an action. The expert reads the
//! expert track of the observation (its own and its neighbors' past expert
//! actions); all other policies read the advice track, which in a standalone
//! run is the policy's own trajectory.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{LadoError, Result};
use crate::network::LocalObservation;
use crate::trajectory::Trajectory;

pub trait Policy: Send + Sync {
    fn name(&self) -> String;
    fn act(&self, obs: &LocalObservation<'_>) -> Result<Vec<f64>>;
}

/// Policy roster entries as they appear in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PolicyKind {
    Expert,
    Greedy,
    HitOnly,
    MlFromFile { path: String },
    MlSyntheticPerturbedOpt { sigma: f64 },
    MlAdversarial { lo: f64, hi: f64 },
}

/// Default box of the adversarial advice.
pub const ADVERSARIAL_BOX: (f64, f64) = (-10.0, 10.0);

impl std::str::FromStr for PolicyKind {
    type Err = LadoError;

    /// `expert`, `greedy`, `hitonly`, `adversarial[:lo:hi]`, `perturbed:<sigma>`
    /// or `file:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || LadoError::Parse(format!("unknown policy '{s}'"));
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        let number = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
        match (head.trim().to_ascii_lowercase().as_str(), rest) {
            ("expert", None) => Ok(PolicyKind::Expert),
            ("greedy", None) => Ok(PolicyKind::Greedy),
            ("hitonly", None) => Ok(PolicyKind::HitOnly),
            ("adversarial", None) => Ok(PolicyKind::MlAdversarial {
                lo: ADVERSARIAL_BOX.0,
                hi: ADVERSARIAL_BOX.1,
            }),
            ("adversarial", Some(r)) => {
                let (lo, hi) = r.split_once(':').ok_or_else(bad)?;
                Ok(PolicyKind::MlAdversarial { lo: number(lo)?, hi: number(hi)? })
            }
            ("perturbed", Some(r)) => Ok(PolicyKind::MlSyntheticPerturbedOpt { sigma: number(r)? }),
            ("file", Some(r)) if !r.is_empty() => Ok(PolicyKind::MlFromFile { path: r.to_string() }),
            _ => Err(bad()),
        }
    }
}

/// Weighted average of anchor points, the minimizer of `sum_k w_k |x - c_k|^2`.
fn weighted_center(terms: &[(f64, Vec<f64>)]) -> Option<Vec<f64>> {
    let total: f64 = terms.iter().map(|(w, _)| w).sum();
    if !(total > 0.0) {
        return None;
    }
    let dim = terms[0].1.len();
    let mut x = vec![0.0; dim];
    for (w, c) in terms {
        for (xi, ci) in x.iter_mut().zip(c) {
            *xi += w * ci;
        }
    }
    x.iter_mut().for_each(|xi| *xi /= total);
    Some(x)
}

/// One-step localized expert.
///
/// Minimizes `f_t(x) + c_t(x, x_{t-1}^expert) + sum_u s_{t-1}(x, x_{t-1}^{u,expert})`.
/// Spatial costs of step `t` are not yet observable, so the latest revealed
/// spatial costs (step `t - 1`) anchor the neighbor terms; at `t = 1` none are
/// revealed and the spatial sum is empty.
pub fn expert_step(obs: &LocalObservation<'_>) -> Vec<f64> {
    let prev = obs.own_expert.last().expect("step 0 is always observed");
    let node = obs.node_now();
    let temporal = obs.temporal_now();
    let mut terms = vec![
        (node.weight, node.target.clone()),
        (temporal.weight, temporal.anchor(prev)),
    ];
    if obs.t >= 2 {
        for nb in &obs.neighbors {
            let s = &nb.spatial[obs.t - 2];
            let anchor_point = nb.expert.last().expect("neighbor history through t-1");
            terms.push((s.weight, s.anchor_for(anchor_point, nb.observer_is_first)));
        }
    }
    weighted_center(&terms).unwrap_or_else(|| prev.to_vec())
}

/// Minimizes node plus temporal cost given the policy's own previous action.
pub fn greedy_step(obs: &LocalObservation<'_>) -> Vec<f64> {
    let prev = obs.own_ml.last().expect("step 0 is always observed");
    let node = obs.node_now();
    let temporal = obs.temporal_now();
    weighted_center(&[
        (node.weight, node.target.clone()),
        (temporal.weight, temporal.anchor(prev)),
    ])
    .unwrap_or_else(|| prev.to_vec())
}

/// Tracks the node target; keeps the previous action when the node weight is zero.
pub fn hitonly_step(obs: &LocalObservation<'_>) -> Vec<f64> {
    let node = obs.node_now();
    if node.weight > 0.0 {
        node.target.clone()
    } else {
        obs.own_ml.last().expect("step 0 is always observed").to_vec()
    }
}

pub struct ExpertPolicy;

impl Policy for ExpertPolicy {
    fn name(&self) -> String {
        "Expert".into()
    }

    fn act(&self, obs: &LocalObservation<'_>) -> Result<Vec<f64>> {
        Ok(expert_step(obs))
    }
}

pub struct GreedyPolicy;

impl Policy for GreedyPolicy {
    fn name(&self) -> String {
        "Greedy".into()
    }

    fn act(&self, obs: &LocalObservation<'_>) -> Result<Vec<f64>> {
        Ok(greedy_step(obs))
    }
}

pub struct HitOnlyPolicy;

impl Policy for HitOnlyPolicy {
    fn name(&self) -> String {
        "HitOnly".into()
    }

    fn act(&self, obs: &LocalObservation<'_>) -> Result<Vec<f64>> {
        Ok(hitonly_step(obs))
    }
}

/// ML advice as a policy.
pub enum MlPolicy {
    /// Precomputed predictions `x~_t^v`.
    Predictions(PredictionSet),
    /// Offline-optimal actions plus seeded Gaussian noise.
    PerturbedOpt { sigma: f64, actions: PredictionSet },
    /// Per coordinate, the box endpoint that maximizes the step's node plus
    /// temporal cost.
    Adversarial { lo: f64, hi: f64 },
    /// The expert itself.
    Expert,
}

impl MlPolicy {
    /// `x^OPT + N(0, sigma^2 I)`, noise drawn in (t, agent, dim) order from `seed`.
    pub fn perturbed_opt(opt: &Trajectory, sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(LadoError::InvalidArgument(format!("sigma must be non-negative, got {sigma}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).map_err(|e| LadoError::InvalidArgument(e.to_string()))?;
        let mut set = PredictionSet::new(opt.agent_count(), opt.horizon(), opt.dim());
        for t in 1..=opt.horizon() {
            for v in 0..opt.agent_count() {
                let x: Vec<f64> = opt
                    .get(v, t)
                    .iter()
                    .map(|xi| if sigma == 0.0 { *xi } else { xi + normal.sample(&mut rng) })
                    .collect();
                set.set(v, t, &x)?;
            }
        }
        Ok(MlPolicy::PerturbedOpt { sigma, actions: set })
    }

    pub fn adversarial(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(LadoError::InvalidArgument(format!("empty adversarial box [{lo}, {hi}]")));
        }
        Ok(MlPolicy::Adversarial { lo, hi })
    }
}

pub fn adversarial_step(obs: &LocalObservation<'_>, lo: f64, hi: f64) -> Vec<f64> {
    let prev = obs.own_ml.last().expect("step 0 is always observed");
    let node = obs.node_now();
    let temporal = obs.temporal_now();
    let anchor = temporal.anchor(prev);
    (0..obs.dim)
        .map(|i| {
            let value = |x: f64| {
                node.weight * (x - node.target[i]).powi(2) + temporal.weight * (x - anchor[i]).powi(2)
            };
            if value(lo) > value(hi) {
                lo
            } else {
                hi
            }
        })
        .collect()
}

impl Policy for MlPolicy {
    fn name(&self) -> String {
        match self {
            MlPolicy::Predictions(_) => "ML".into(),
            MlPolicy::PerturbedOpt { sigma, .. } => format!("ML(perturbed:{sigma})"),
            MlPolicy::Adversarial { .. } => "ML(adversarial)".into(),
            MlPolicy::Expert => "ML(expert)".into(),
        }
    }

    fn act(&self, obs: &LocalObservation<'_>) -> Result<Vec<f64>> {
        match self {
            MlPolicy::Predictions(set) | MlPolicy::PerturbedOpt { actions: set, .. } => {
                set.get(obs.agent, obs.t).map(<[f64]>::to_vec)
            }
            MlPolicy::Adversarial { lo, hi } => Ok(adversarial_step(obs, *lo, *hi)),
            MlPolicy::Expert => Ok(expert_step(obs)),
        }
    }
}

/// ML predictions `x~_t^v` for every agent and step `1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    agent_count: usize,
    horizon: usize,
    dim: usize,
    values: Vec<f64>,
    filled: Vec<bool>,
}

impl PredictionSet {
    pub fn new(agent_count: usize, horizon: usize, dim: usize) -> Self {
        let len = agent_count * horizon;
        Self {
            agent_count,
            horizon,
            dim,
            values: vec![0.0; len * dim],
            filled: vec![false; len],
        }
    }

    pub fn from_trajectory(traj: &Trajectory) -> Self {
        let mut set = Self::new(traj.agent_count(), traj.horizon(), traj.dim());
        for v in 0..traj.agent_count() {
            for t in 1..=traj.horizon() {
                set.set(v, t, traj.get(v, t)).expect("shape matches");
            }
        }
        set
    }

    pub fn agent_count(&self) -> usize {
        self.agent_count
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn slot(&self, agent: usize, t: usize) -> Option<usize> {
        (agent < self.agent_count && (1..=self.horizon).contains(&t))
            .then(|| agent * self.horizon + (t - 1))
    }

    pub fn set(&mut self, agent: usize, t: usize, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(LadoError::DimensionMismatch(format!(
                "prediction has dimension {}, expected {}",
                x.len(),
                self.dim
            )));
        }
        let k = self.slot(agent, t).ok_or(LadoError::MissingPrediction { agent, t })?;
        self.values[k * self.dim..(k + 1) * self.dim].copy_from_slice(x);
        self.filled[k] = true;
        Ok(())
    }

    pub fn get(&self, agent: usize, t: usize) -> Result<&[f64]> {
        match self.slot(agent, t) {
            Some(k) if self.filled[k] => Ok(&self.values[k * self.dim..(k + 1) * self.dim]),
            _ => Err(LadoError::MissingPrediction { agent, t }),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.filled.iter().all(|f| *f)
    }
}

/// Row of the prediction file.
#[derive(Debug, Serialize, Deserialize)]
struct PredictionRow {
    agent: usize,
    t: usize,
    dim: usize,
    value: f64,
}

pub fn write_predictions<W: Write>(set: &PredictionSet, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["agent", "t", "dim", "value"])?;
    for agent in 0..set.agent_count {
        for t in 1..=set.horizon {
            let x = set.get(agent, t)?;
            for (dim, value) in x.iter().enumerate() {
                w.write_record([
                    agent.to_string(),
                    t.to_string(),
                    dim.to_string(),
                    format_float(*value),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads `agent,t,dim,value` rows and checks coverage of every `(agent, t, dim)`.
pub fn read_predictions<R: Read>(
    reader: R,
    agent_count: usize,
    horizon: usize,
    dim: usize,
) -> Result<PredictionSet> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["agent", "t", "dim", "value"] {
        return Err(LadoError::Parse(format!(
            "prediction header must be agent,t,dim,value, found {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut seen = BTreeMap::new();
    for row in r.deserialize::<PredictionRow>() {
        let row = row?;
        if row.agent >= agent_count || row.t == 0 || row.t > horizon || row.dim >= dim {
            return Err(LadoError::Parse(format!(
                "prediction row (agent {}, t {}, dim {}) outside ({agent_count} agents, horizon {horizon}, dim {dim})",
                row.agent, row.t, row.dim
            )));
        }
        if !row.value.is_finite() {
            return Err(LadoError::Parse(format!(
                "non-finite prediction at (agent {}, t {}, dim {})",
                row.agent, row.t, row.dim
            )));
        }
        if seen.insert((row.agent, row.t, row.dim), row.value).is_some() {
            return Err(LadoError::Parse(format!(
                "duplicate prediction row (agent {}, t {}, dim {})",
                row.agent, row.t, row.dim
            )));
        }
    }
    let mut set = PredictionSet::new(agent_count, horizon, dim);
    for agent in 0..agent_count {
        for t in 1..=horizon {
            let mut x = Vec::with_capacity(dim);
            for d in 0..dim {
                x.push(*seen.get(&(agent, t, d)).ok_or(LadoError::MissingPrediction { agent, t })?);
            }
            set.set(agent, t, &x)?;
        }
    }
    Ok(set)
}

pub fn read_predictions_file(
    path: &Path,
    agent_count: usize,
    horizon: usize,
    dim: usize,
) -> Result<PredictionSet> {
    read_predictions(std::fs::File::open(path)?, agent_count, horizon, dim)
}

/// Shortest decimal that round-trips to the same binary64.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}
