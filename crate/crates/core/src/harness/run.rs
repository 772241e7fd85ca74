use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::battery::{build_net_demand, canonicalize, read_demand_file, read_weather_file, synthetic_traces};
use crate::bounds::{bound_scale, c_hat_empirical, omega_empirical, EpisodeTracks};
use crate::costs::{global_cost, smoothness_of, QuadraticCostInstance, SmoothnessParams};
use crate::engine::{simulate, Combiner, EpisodeOutcome, SimOptions};
use crate::error::{LadoError, Result};
use crate::lado::{constraint_slack_from_history, RobustnessConfig, FEASIBILITY_TOLERANCE};
use crate::offline_opt::solve_opt;
use crate::policies::{
    format_float, read_predictions_file, ExpertPolicy, GreedyPolicy, HitOnlyPolicy, MlPolicy, Policy,
    PolicyKind,
};
use crate::trajectory::Trajectory;

use super::config::{RosterEntry, RunConfig, Scenario, Split};
use super::synthetic::synthetic_instance;

/// Absolute slack allowed on the total-cost robustness check.
pub const ROBUSTNESS_TOLERANCE: f64 = 1e-6;

/// Independent seed for `(seed, stream, index)`.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_INSTANCE: u64 = 1;
const STREAM_ML: u64 = 2;

pub fn lado_name(lambda: f64) -> String {
    format!("LADO({})", format_float(lambda))
}

/// Per-step audit of one LADO run.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeAudit {
    /// Largest constraint slack recomputed from the trajectories.
    pub max_slack: f64,
    /// Steps whose recomputed slack exceeds the feasibility tolerance.
    pub violations: usize,
}

/// Recomputes every constraint of a LADO run from the final trajectories,
/// independently of the ledgers used during simulation.
pub fn audit_episode(
    instance: &QuadraticCostInstance,
    outcome: &EpisodeOutcome,
    smoothness: &SmoothnessParams,
    config: &RobustnessConfig,
) -> Result<EpisodeAudit> {
    let mut max_slack = f64::NEG_INFINITY;
    let mut violations = 0;
    for v in 0..instance.agent_count() {
        for t in 1..=instance.horizon {
            let slack =
                constraint_slack_from_history(instance, &outcome.actual, &outcome.expert, v, t, smoothness, config)?;
            max_slack = max_slack.max(slack);
            if slack > FEASIBILITY_TOLERANCE {
                violations += 1;
            }
        }
    }
    Ok(EpisodeAudit { max_slack, violations })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadoReport {
    pub lambda: f64,
    pub cost: f64,
    /// `cost / cost(Expert)`; one when both are zero.
    pub ratio: f64,
    pub max_slack: f64,
    pub violations: usize,
    pub projections: usize,
    /// This episode's contribution to Omega.
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeReport {
    pub episode: usize,
    /// `(policy, total cost)` in roster order.
    pub costs: Vec<(String, f64)>,
    pub lado: Vec<LadoReport>,
    /// `(l_f + 2 l_T + D l_S) / 2` of this episode.
    pub scale: f64,
    /// Per-episode C-hat, absent when the advice equals the expert.
    pub c_hat: Option<f64>,
}

impl EpisodeReport {
    pub fn cost(&self, policy: &str) -> Option<f64> {
        self.costs.iter().find(|(p, _)| p == policy).map(|(_, c)| *c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchReport {
    pub episodes: Vec<EpisodeReport>,
    pub policies: Vec<String>,
    pub lambdas: Vec<f64>,
}

/// Immutable inputs shared by all episodes of a batch.
pub enum EpisodeSource {
    Synthetic,
    Battery(Vec<Vec<f64>>),
}

impl EpisodeSource {
    pub fn prepare(config: &RunConfig) -> Result<Self> {
        match config.scenario {
            Scenario::SyntheticRandom => Ok(EpisodeSource::Synthetic),
            Scenario::Battery => {
                let b = &config.battery;
                let (demand, weather) = match (&b.demand_trace, &b.weather_trace) {
                    (Some(d), Some(w)) => (read_demand_file(d)?, read_weather_file(w)?),
                    (None, None) => synthetic_traces(b.hours, b.trace_seed),
                    _ => {
                        return Err(LadoError::InvalidArgument(
                            "battery scenario needs both traces or neither".into(),
                        ))
                    }
                };
                let data = build_net_demand(&demand, &weather, &b.renewables, b.window, b.train_hours)?;
                let sequences = match b.split {
                    Split::Train => data.train,
                    Split::Test => data.test,
                    Split::All => data.train.into_iter().chain(data.test).collect(),
                };
                if sequences.is_empty() {
                    return Err(LadoError::InvalidArgument("selected split has no sequences".into()));
                }
                Ok(EpisodeSource::Battery(sequences))
            }
        }
    }

    pub fn instance(&self, config: &RunConfig, episode: usize) -> Result<QuadraticCostInstance> {
        match self {
            EpisodeSource::Synthetic => synthetic_instance(
                &config.synthetic,
                derive_seed(config.seed, STREAM_INSTANCE, episode as u64),
            ),
            EpisodeSource::Battery(seqs) => {
                canonicalize(&config.battery.params, &seqs[battery_window(seqs.len(), config.episodes, episode)])
            }
        }
    }
}

/// Window used by a battery episode. Fewer episodes than windows are spread
/// evenly over the split; more episodes wrap around.
pub fn battery_window(windows: usize, episodes: usize, episode: usize) -> usize {
    if episodes <= windows {
        episode * windows / episodes
    } else {
        episode % windows
    }
}

/// Prediction file for an episode: `path` itself, or `path/<episode>.csv`
/// when `path` is a directory.
pub fn prediction_path(path: &Path, episode: usize) -> PathBuf {
    if path.is_dir() {
        path.join(format!("{episode}.csv"))
    } else {
        path.to_path_buf()
    }
}

/// Builds the advice policy of one episode.
pub fn advice_policy(
    kind: &PolicyKind,
    instance: &QuadraticCostInstance,
    opt: Option<&Trajectory>,
    seed: u64,
    episode: usize,
) -> Result<Box<dyn Policy>> {
    Ok(match kind {
        PolicyKind::Expert => Box::new(MlPolicy::Expert),
        PolicyKind::Greedy => Box::new(GreedyPolicy),
        PolicyKind::HitOnly => Box::new(HitOnlyPolicy),
        PolicyKind::MlAdversarial { lo, hi } => Box::new(MlPolicy::adversarial(*lo, *hi)?),
        PolicyKind::MlSyntheticPerturbedOpt { sigma } => {
            let opt = opt.ok_or_else(|| LadoError::InvalidArgument("perturbed advice needs OPT".into()))?;
            Box::new(MlPolicy::perturbed_opt(opt, *sigma, derive_seed(seed, STREAM_ML, episode as u64))?)
        }
        PolicyKind::MlFromFile { path } => {
            let file = prediction_path(Path::new(path), episode);
            let set = read_predictions_file(&file, instance.agent_count(), instance.horizon, instance.dim())?;
            Box::new(MlPolicy::Predictions(set))
        }
    })
}

/// Runs every roster policy on one episode.
pub fn run_episode(config: &RunConfig, source: &EpisodeSource, episode: usize) -> Result<EpisodeReport> {
    let instance = source.instance(config, episode)?;
    run_instance(config, &instance, episode)
}

/// Runs every roster policy on a given instance.
pub fn run_instance(config: &RunConfig, instance: &QuadraticCostInstance, episode: usize) -> Result<EpisodeReport> {
    let smoothness = smoothness_of(instance);
    let plain = SimOptions::default();
    let needs_opt = config.runs(RosterEntry::Opt)
        || matches!(config.ml, PolicyKind::MlSyntheticPerturbedOpt { .. });
    let opt = if needs_opt { Some(solve_opt(instance)?) } else { None };
    let advice = advice_policy(&config.ml, instance, opt.as_ref(), config.seed, episode)?;

    let mut costs = Vec::new();
    if let (true, Some(opt)) = (config.runs(RosterEntry::Opt), &opt) {
        costs.push(("OPT".to_string(), global_cost(instance, opt)?));
    }
    let expert_run = simulate(instance, &ExpertPolicy, None, Combiner::FollowExpert, &plain)?;
    let expert_cost = global_cost(instance, &expert_run.actual)?;
    costs.push(("Expert".to_string(), expert_cost));
    let follow = |policy: &dyn Policy| -> Result<f64> {
        let out = simulate(instance, &ExpertPolicy, Some(policy), Combiner::FollowAdvice, &plain)?;
        global_cost(instance, &out.actual)
    };
    if config.runs(RosterEntry::Greedy) {
        costs.push(("Greedy".to_string(), follow(&GreedyPolicy)?));
    }
    if config.runs(RosterEntry::HitOnly) {
        costs.push(("HitOnly".to_string(), follow(&HitOnlyPolicy)?));
    }
    if config.runs(RosterEntry::Ml) {
        costs.push(("ML".to_string(), follow(advice.as_ref())?));
    }

    let mut lado = Vec::new();
    let mut c_hat = None;
    if config.runs(RosterEntry::Lado) {
        let options = SimOptions { verify_ledger: config.verify_ledger, ..Default::default() };
        for rc in config.robustness_configs()? {
            let combiner = Combiner::Lado { config: rc, smoothness };
            let out = simulate(instance, &ExpertPolicy, Some(advice.as_ref()), combiner, &options)?;
            let cost = global_cost(instance, &out.actual)?;
            let audit = audit_episode(instance, &out, &smoothness, &rc)?;
            let tracks = EpisodeTracks {
                instance,
                smoothness: &smoothness,
                expert: &out.expert,
                ml: &out.advice,
            };
            if c_hat.is_none() {
                c_hat = c_hat_empirical(&[tracks]).ok();
            }
            let ratio = if expert_cost > 0.0 {
                cost / expert_cost
            } else if cost == 0.0 {
                1.0
            } else {
                f64::INFINITY
            };
            costs.push((lado_name(rc.lambda), cost));
            lado.push(LadoReport {
                lambda: rc.lambda,
                cost,
                ratio,
                max_slack: audit.max_slack,
                violations: audit.violations,
                projections: out.projections,
                omega: omega_empirical(&[tracks], rc.lambda)?,
            });
        }
    }
    Ok(EpisodeReport {
        episode,
        costs,
        lado,
        scale: bound_scale(&smoothness, instance.network.max_degree()),
        c_hat,
    })
}

/// Runs all episodes in parallel; results are ordered by episode index.
pub fn run_batch(config: &RunConfig) -> Result<BatchReport> {
    config.validate()?;
    let source = EpisodeSource::prepare(config)?;
    let episodes = (0..config.episodes)
        .into_par_iter()
        .map(|e| {
            run_episode(config, &source, e).map_err(|err| LadoError::Episode {
                episode: e,
                source: Box::new(err),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let policies = episodes[0].costs.iter().map(|(p, _)| p.clone()).collect();
    Ok(BatchReport {
        episodes,
        policies,
        lambdas: if config.runs(RosterEntry::Lado) { config.lambdas.clone() } else { Vec::new() },
    })
}
