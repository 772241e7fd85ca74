//! Decentralized battery management.
//!
//! Unit `v` has state of charge `x_t = A x_{t-1} + B xi_t + w_t`, where `xi` is
//! the grid schedule and `w` the disturbance from net demand. It pays
//! `|x_t - x_nominal|^2 + b |xi_t|^2` plus `c |x_t^v - x_t^u|^2` on every edge.
//! With the cumulative schedule `a_t = sum_i A^{t-i} B xi_i` as the action this
//! becomes a quadratic cost instance.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::costs::{NodeCost, QuadraticCostInstance, SpatialCost, TemporalCost};
use crate::error::{LadoError, Result};
use crate::network::{build_network, NetworkSpec};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryUnit {
    /// Self-degradation `A` in (0, 1].
    pub degradation: f64,
    /// Charging efficiency `B` > 0.
    pub efficiency: f64,
    pub nominal: f64,
    pub initial: f64,
    /// Fraction of the normalized net demand drawn from this unit.
    #[serde(default = "default_share")]
    pub demand_share: f64,
}

fn default_share() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatteryParams {
    pub units: Vec<BatteryUnit>,
    /// Grid usage penalty `b`.
    pub grid_penalty: f64,
    /// State-of-charge difference penalty `c`.
    pub soc_penalty: f64,
    /// Defaults to fully connected.
    #[serde(default)]
    pub edges: Option<Vec<(usize, usize)>>,
}

impl Default for BatteryParams {
    fn default() -> Self {
        let unit = |a| BatteryUnit {
            degradation: a,
            efficiency: 1.0,
            nominal: 0.5,
            initial: 0.5,
            demand_share: default_share(),
        };
        Self {
            units: vec![unit(0.9), unit(0.93), unit(0.95)],
            grid_penalty: 16.0,
            soc_penalty: 0.2,
            edges: None,
        }
    }
}

impl BatteryParams {
    pub fn validate(&self) -> Result<()> {
        if self.units.is_empty() {
            return Err(LadoError::InvalidArgument("battery scenario needs at least one unit".into()));
        }
        for (v, u) in self.units.iter().enumerate() {
            if !(u.degradation > 0.0 && u.degradation <= 1.0) {
                return Err(LadoError::InvalidArgument(format!(
                    "unit {v}: degradation must lie in (0, 1], got {}",
                    u.degradation
                )));
            }
            if !(u.efficiency > 0.0) {
                return Err(LadoError::InvalidArgument(format!(
                    "unit {v}: efficiency must be positive, got {}",
                    u.efficiency
                )));
            }
            if ![u.nominal, u.initial, u.demand_share].iter().all(|x| x.is_finite()) {
                return Err(LadoError::InvalidArgument(format!("unit {v}: non-finite parameter")));
            }
        }
        if !(self.grid_penalty > 0.0) || !(self.soc_penalty >= 0.0) {
            return Err(LadoError::InvalidArgument("need b > 0 and c >= 0".into()));
        }
        Ok(())
    }

    pub fn network(&self) -> Result<NetworkSpec> {
        let v_count = self.units.len();
        match &self.edges {
            Some(edges) => build_network(v_count, edges, 1),
            None => NetworkSpec::fully_connected(v_count, 1),
        }
    }

    /// Disturbances `w[v][t - 1] = -share_v * net_demand[t]` for `t = 1..=T`.
    ///
    /// `sequence[0]` is the hour before the first decision and only serves as
    /// context for predictors.
    pub fn disturbances(&self, sequence: &[f64]) -> Vec<Vec<f64>> {
        self.units
            .iter()
            .map(|u| sequence[1..].iter().map(|p| -u.demand_share * p).collect())
            .collect()
    }
}

/// Context parameters `y[v][t - 1] = x_nominal - A^t x_init - sum_{i<=t} A^{t-i} w_i`.
pub fn context_targets(params: &BatteryParams, w: &[Vec<f64>]) -> Vec<Vec<f64>> {
    params
        .units
        .iter()
        .zip(w)
        .map(|(u, wv)| {
            let mut free = u.initial;
            wv.iter()
                .map(|wi| {
                    free = u.degradation * free + wi;
                    u.nominal - free
                })
                .collect()
        })
        .collect()
}

/// Quadratic cost instance of the battery problem for disturbances `w[v][t - 1]`.
pub fn canonicalize_disturbances(params: &BatteryParams, w: &[Vec<f64>]) -> Result<QuadraticCostInstance> {
    params.validate()?;
    let network = params.network()?;
    let v_count = params.units.len();
    if w.len() != v_count {
        return Err(LadoError::DimensionMismatch(format!(
            "{} disturbance series for {v_count} units",
            w.len()
        )));
    }
    let horizon = w[0].len();
    if horizon == 0 || w.iter().any(|wv| wv.len() != horizon) {
        return Err(LadoError::DimensionMismatch("disturbance series must share a positive length".into()));
    }
    let y = context_targets(params, w);
    let node = y
        .iter()
        .map(|yv| yv.iter().map(|&yt| NodeCost::new(vec![yt], 1.0)).collect())
        .collect();
    let temporal = params
        .units
        .iter()
        .map(|u| {
            let c = TemporalCost::scalar(1, u.degradation, params.grid_penalty / (u.efficiency * u.efficiency));
            vec![c; horizon]
        })
        .collect();
    let spatial = network
        .edges()
        .iter()
        .map(|e| {
            let (ua, ub) = (&params.units[e.a], &params.units[e.b]);
            (0..horizon)
                .map(|t| {
                    let offset = (y[e.a][t] - y[e.b][t]) - (ua.nominal - ub.nominal);
                    SpatialCost::new(vec![offset], params.soc_penalty)
                })
                .collect()
        })
        .collect();
    let instance = QuadraticCostInstance {
        network,
        horizon,
        initial: vec![vec![0.0]; v_count],
        node,
        temporal,
        spatial,
    };
    instance.validate()?;
    Ok(instance)
}

/// Instance for one normalized net-demand sequence of length `T + 1`.
pub fn canonicalize(params: &BatteryParams, sequence: &[f64]) -> Result<QuadraticCostInstance> {
    if sequence.len() < 2 {
        return Err(LadoError::InvalidArgument("net-demand sequence needs at least two samples".into()));
    }
    canonicalize_disturbances(params, &params.disturbances(sequence))
}

/// State of charge `soc[v][t]` for `t = 0..=T` under a grid schedule `xi[v][t - 1]`.
pub fn simulate_soc(params: &BatteryParams, w: &[Vec<f64>], xi: &[Vec<f64>]) -> Vec<Vec<f64>> {
    params
        .units
        .iter()
        .zip(w.iter().zip(xi))
        .map(|(u, (wv, xv))| {
            let mut soc = vec![u.initial];
            let mut x = u.initial;
            for (wi, xii) in wv.iter().zip(xv) {
                x = u.degradation * x + u.efficiency * xii + wi;
                soc.push(x);
            }
            soc
        })
        .collect()
}

/// Battery cost evaluated directly on states of charge and schedules.
pub fn direct_cost(params: &BatteryParams, soc: &[Vec<f64>], xi: &[Vec<f64>]) -> Result<f64> {
    let network = params.network()?;
    let horizon = xi.first().map_or(0, Vec::len);
    let mut total = 0.0;
    for t in 1..=horizon {
        for (v, u) in params.units.iter().enumerate() {
            total += (soc[v][t] - u.nominal).powi(2) + params.grid_penalty * xi[v][t - 1].powi(2);
        }
        for e in network.edges() {
            total += params.soc_penalty * (soc[e.a][t] - soc[e.b][t]).powi(2);
        }
    }
    Ok(total)
}

/// Cumulative actions `a_t = sum_{i<=t} A^{t-i} B xi_i`, with `a_0 = 0`.
pub fn schedule_to_actions(params: &BatteryParams, xi: &[Vec<f64>]) -> Trajectory {
    let horizon = xi.first().map_or(0, Vec::len);
    let mut traj = Trajectory::zeros(params.units.len(), horizon, 1);
    for (v, (u, xv)) in params.units.iter().zip(xi).enumerate() {
        let mut a = 0.0;
        for (t, xii) in xv.iter().enumerate() {
            a = u.degradation * a + u.efficiency * xii;
            traj.set(v, t + 1, &[a]);
        }
    }
    traj
}

/// Grid schedule `xi_t = (a_t - A a_{t-1}) / B` that realizes the actions.
pub fn actions_to_schedule(params: &BatteryParams, actions: &Trajectory) -> Vec<Vec<f64>> {
    params
        .units
        .iter()
        .enumerate()
        .map(|(v, u)| {
            (1..=actions.horizon())
                .map(|t| (actions.get(v, t)[0] - u.degradation * actions.get(v, t - 1)[0]) / u.efficiency)
                .collect()
        })
        .collect()
}

/// State of charge `soc[v][t]`, `t = 0..=T`, reached by an action trajectory:
/// `x_t = A^t x_init + a_t + sum_{i<=t} A^{t-i} w_i`.
pub fn recover_soc(params: &BatteryParams, w: &[Vec<f64>], actions: &Trajectory) -> Vec<Vec<f64>> {
    let y = context_targets(params, w);
    params
        .units
        .iter()
        .enumerate()
        .map(|(v, u)| {
            let mut soc = vec![u.initial];
            soc.extend((1..=actions.horizon()).map(|t| u.nominal - y[v][t - 1] + actions.get(v, t)[0]));
            soc
        })
        .collect()
}

/// Constants of the renewable generation formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenewableConstants {
    pub kappa_solar: f64,
    pub array_area: f64,
    pub kappa_wind: f64,
    pub air_density: f64,
    pub swept_area: f64,
}

impl Default for RenewableConstants {
    fn default() -> Self {
        Self {
            kappa_solar: 0.2,
            array_area: 10.0,
            kappa_wind: 0.4,
            air_density: 1.225,
            swept_area: 0.5,
        }
    }
}

/// `1/2 kappa A I (1 - 0.05 (Temp - 25))`, clamped below at zero.
pub fn solar_power(kappa: f64, area: f64, radiation: f64, temp: f64) -> f64 {
    (0.5 * kappa * area * radiation * (1.0 - 0.05 * (temp - 25.0))).max(0.0)
}

/// `1/2 kappa rho A V^3`
pub fn wind_power(kappa: f64, air_density: f64, swept_area: f64, speed: f64) -> f64 {
    0.5 * kappa * air_density * swept_area * speed.powi(3)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherSample {
    pub wind_speed: f64,
    pub solar_rad: f64,
    pub temp: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeatherTrace {
    pub samples: Vec<WeatherSample>,
}

impl WeatherTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for (t, s) in self.samples.iter().enumerate() {
            if !(s.wind_speed >= 0.0) || !(s.solar_rad >= 0.0) || !s.temp.is_finite() {
                return Err(LadoError::InvalidArgument(format!("weather sample {t} is out of range")));
            }
        }
        Ok(())
    }

    pub fn renewable_power(&self, consts: &RenewableConstants) -> Vec<f64> {
        self.samples
            .iter()
            .map(|s| {
                solar_power(consts.kappa_solar, consts.array_area, s.solar_rad, s.temp)
                    + wind_power(consts.kappa_wind, consts.air_density, consts.swept_area, s.wind_speed)
            })
            .collect()
    }
}

/// Min-max map onto `[-1, 1]`, fitted once and then frozen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMaxNormalizer {
    pub min: f64,
    pub max: f64,
}

impl MinMaxNormalizer {
    pub fn fit(data: &[f64]) -> Result<Self> {
        if data.is_empty() || data.iter().any(|x| !x.is_finite()) {
            return Err(LadoError::InvalidArgument("normalizer needs finite, non-empty data".into()));
        }
        let min = data.iter().copied().fold(f64::INFINITY, f64::min);
        let max = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { min, max })
    }

    /// A constant training range maps everything to zero.
    pub fn apply(&self, x: f64) -> f64 {
        let span = self.max - self.min;
        if span <= 0.0 {
            return 0.0;
        }
        ((2.0 * x - (self.max + self.min)) / span).clamp(-1.0, 1.0)
    }
}

pub const WINDOW_LENGTH: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct NetDemandDataset {
    pub normalizer: MinMaxNormalizer,
    /// Windows lying entirely inside the training prefix.
    pub train: Vec<Vec<f64>>,
    pub test: Vec<Vec<f64>>,
}

impl NetDemandDataset {
    pub fn len(&self) -> usize {
        self.train.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Net demand `P_d - P_solar - P_wind`, normalized with constants fitted on
/// the first `train_len` hours, cut into stride-1 windows of `window` samples.
pub fn build_net_demand(
    demand: &[f64],
    weather: &WeatherTrace,
    consts: &RenewableConstants,
    window: usize,
    train_len: usize,
) -> Result<NetDemandDataset> {
    if demand.len() != weather.len() {
        return Err(LadoError::DimensionMismatch(format!(
            "demand trace has {} samples, weather trace {}",
            demand.len(),
            weather.len()
        )));
    }
    weather.validate()?;
    if window == 0 || demand.len() < window {
        return Err(LadoError::InvalidArgument(format!(
            "need at least {window} samples, got {}",
            demand.len()
        )));
    }
    let train_len = train_len.clamp(1, demand.len());
    let net: Vec<f64> = demand
        .iter()
        .zip(weather.renewable_power(consts))
        .map(|(d, r)| d - r)
        .collect();
    let normalizer = MinMaxNormalizer::fit(&net[..train_len])?;
    let normalized: Vec<f64> = net.iter().map(|&x| normalizer.apply(x)).collect();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (start, w) in normalized.windows(window).enumerate() {
        if start + window <= train_len {
            train.push(w.to_vec());
        } else {
            test.push(w.to_vec());
        }
    }
    Ok(NetDemandDataset { normalizer, train, test })
}

/// Seeded synthetic hourly traces: diurnal demand and weather with noise.
pub fn synthetic_traces(hours: usize, seed: u64) -> (Vec<f64>, WeatherTrace) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let tau = std::f64::consts::TAU;
    let mut demand = Vec::with_capacity(hours);
    let mut samples = Vec::with_capacity(hours);
    let mut wind = 4.0;
    let mut cloud: f64 = 0.3;
    // day-level activity: calm days have flat demand and little wind
    let mut activity: f64 = 1.0;
    for h in 0..hours {
        let hour = (h % 24) as f64;
        let day = (h / 24) as f64;
        if h % 24 == 0 {
            activity = (0.8 * noise.sample(&mut rng) as f64).exp();
        }
        demand.push(
            5.0 + activity * (1.5 * (tau * (hour - 9.0) / 24.0).sin() + 0.3 * noise.sample(&mut rng))
                + 0.3 * (tau * day / 7.0).sin(),
        );
        let wind_level = 4.0 * activity;
        wind = (wind + 0.8 * activity * noise.sample(&mut rng) + 0.2 * (wind_level - wind)).max(0.0);
        cloud = (cloud + 0.1 * noise.sample(&mut rng)).clamp(0.0, 1.0);
        let daylight = (tau * (hour - 6.0) / 24.0).sin().max(0.0);
        let solar_rad = daylight * (1.0 - 0.7 * cloud) * rng.random_range(0.9..1.0);
        let temp = 18.0 + 8.0 * (tau * (hour - 9.0) / 24.0).sin() + noise.sample(&mut rng);
        samples.push(WeatherSample { wind_speed: wind, solar_rad, temp });
    }
    (demand, WeatherTrace { samples })
}

#[derive(Debug, Serialize, Deserialize)]
struct DemandRow {
    t: usize,
    demand: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct WeatherRow {
    t: usize,
    wind_speed: f64,
    solar_rad: f64,
    temp: f64,
}

fn check_hours(rows: impl Iterator<Item = usize>) -> Result<()> {
    for (expected, t) in rows.enumerate() {
        if t != expected {
            return Err(LadoError::Parse(format!("expected hour {expected}, found {t}")));
        }
    }
    Ok(())
}

pub fn write_demand_trace<W: Write>(demand: &[f64], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "demand"])?;
    for (t, d) in demand.iter().enumerate() {
        w.write_record([t.to_string(), format!("{d:?}")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_demand_trace<R: Read>(reader: R) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_reader(reader);
    let rows = r.deserialize().collect::<std::result::Result<Vec<DemandRow>, _>>()?;
    check_hours(rows.iter().map(|r| r.t))?;
    Ok(rows.into_iter().map(|r| r.demand).collect())
}

pub fn write_weather_trace<W: Write>(trace: &WeatherTrace, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "wind_speed", "solar_rad", "temp"])?;
    for (t, s) in trace.samples.iter().enumerate() {
        w.write_record([
            t.to_string(),
            format!("{:?}", s.wind_speed),
            format!("{:?}", s.solar_rad),
            format!("{:?}", s.temp),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_weather_trace<R: Read>(reader: R) -> Result<WeatherTrace> {
    let mut r = csv::Reader::from_reader(reader);
    let rows = r.deserialize().collect::<std::result::Result<Vec<WeatherRow>, _>>()?;
    check_hours(rows.iter().map(|r| r.t))?;
    let trace = WeatherTrace {
        samples: rows
            .into_iter()
            .map(|r| WeatherSample { wind_speed: r.wind_speed, solar_rad: r.solar_rad, temp: r.temp })
            .collect(),
    };
    trace.validate()?;
    Ok(trace)
}

pub fn read_demand_file(path: &Path) -> Result<Vec<f64>> {
    read_demand_trace(std::fs::File::open(path)?)
}

pub fn read_weather_file(path: &Path) -> Result<WeatherTrace> {
    read_weather_trace(std::fs::File::open(path)?)
}
