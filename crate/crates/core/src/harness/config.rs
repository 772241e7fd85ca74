use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::battery::{BatteryParams, RenewableConstants, WINDOW_LENGTH};
use crate::error::{LadoError, Result};
use crate::lado::{Lambda0Mode, RobustnessConfig};
use crate::policies::PolicyKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "synthetic-random")]
    SyntheticRandom,
    #[serde(rename = "battery")]
    Battery,
}

/// Policies evaluated in a batch besides the expert, which always runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RosterEntry {
    Opt,
    Expert,
    Greedy,
    HitOnly,
    Ml,
    Lado,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub agents: usize,
    pub horizon: usize,
    pub dim: usize,
    /// Defaults to fully connected.
    pub edges: Option<Vec<(usize, usize)>>,
    pub spatial_weight: f64,
    /// Scalar temporal transition `M = a I`.
    pub transition: f64,
    /// Standard deviation of the node-target random walk increments.
    pub step_std: f64,
    pub offset_std: f64,
    pub initial_std: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            agents: 3,
            horizon: 24,
            dim: 1,
            edges: None,
            spatial_weight: 1.0,
            transition: 1.0,
            step_std: 1.0,
            offset_std: 0.0,
            initial_std: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatteryConfig {
    pub params: BatteryParams,
    pub renewables: RenewableConstants,
    /// Hourly demand trace (`t,demand`); synthetic traces are generated when absent.
    pub demand_trace: Option<PathBuf>,
    /// Hourly weather trace (`t,wind_speed,solar_rad,temp`).
    pub weather_trace: Option<PathBuf>,
    pub hours: usize,
    pub train_hours: usize,
    pub trace_seed: u64,
    pub window: usize,
    pub split: Split,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            params: BatteryParams::default(),
            renewables: RenewableConstants::default(),
            demand_trace: None,
            weather_trace: None,
            hours: 1440,
            train_hours: 1080,
            trace_seed: 2024,
            window: WINDOW_LENGTH,
            split: Split::Test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub episodes: usize,
    pub seed: u64,
    pub lambdas: Vec<f64>,
    pub lambda0: Lambda0Mode,
    pub roster: Vec<RosterEntry>,
    pub ml: PolicyKind,
    /// Recompute every LADO constraint from scratch during simulation.
    pub verify_ledger: bool,
    pub out: PathBuf,
    pub synthetic: SyntheticConfig,
    pub battery: BatteryConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::SyntheticRandom,
            episodes: 100,
            seed: 0,
            lambdas: vec![0.2, 0.5, 1.0, 2.0],
            lambda0: Lambda0Mode::Optimal,
            roster: vec![
                RosterEntry::Opt,
                RosterEntry::Expert,
                RosterEntry::Greedy,
                RosterEntry::HitOnly,
                RosterEntry::Ml,
                RosterEntry::Lado,
            ],
            ml: PolicyKind::MlSyntheticPerturbedOpt { sigma: 0.5 },
            verify_ledger: false,
            out: PathBuf::from("results"),
            synthetic: SyntheticConfig::default(),
            battery: BatteryConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| LadoError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut config = Self::from_toml(&std::fs::read_to_string(path)?)?;
        // Relative paths inside the file are relative to the file.
        if let Some(dir) = path.parent() {
            let resolve = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            };
            if let Some(p) = config.battery.demand_trace.as_mut() {
                resolve(p);
            }
            if let Some(p) = config.battery.weather_trace.as_mut() {
                resolve(p);
            }
            if let PolicyKind::MlFromFile { path } = &mut config.ml {
                let mut p = PathBuf::from(&*path);
                resolve(&mut p);
                *path = p.to_string_lossy().into_owned();
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LadoError::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(LadoError::InvalidArgument("episodes must be positive".into()));
        }
        if self.roster.contains(&RosterEntry::Lado) && self.lambdas.is_empty() {
            return Err(LadoError::InvalidArgument("LADO needs at least one lambda".into()));
        }
        for &lambda in &self.lambdas {
            RobustnessConfig::new(lambda, self.lambda0)?;
        }
        match self.scenario {
            Scenario::SyntheticRandom => {
                let s = &self.synthetic;
                if s.agents == 0 || s.horizon == 0 || s.dim == 0 {
                    return Err(LadoError::InvalidArgument("synthetic sizes must be positive".into()));
                }
                let params = [s.spatial_weight, s.step_std, s.offset_std, s.initial_std];
                if params.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) || !s.transition.is_finite() {
                    return Err(LadoError::InvalidArgument("synthetic parameters must be finite and non-negative".into()));
                }
            }
            Scenario::Battery => {
                self.battery.params.validate()?;
                if self.battery.window < 2 {
                    return Err(LadoError::InvalidArgument("battery window must be at least 2".into()));
                }
            }
        }
        Ok(())
    }

    pub fn robustness_configs(&self) -> Result<Vec<RobustnessConfig>> {
        self.lambdas.iter().map(|&l| RobustnessConfig::new(l, self.lambda0)).collect()
    }

    pub fn runs(&self, entry: RosterEntry) -> bool {
        self.roster.contains(&entry)
    }
}
