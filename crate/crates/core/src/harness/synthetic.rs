use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::costs::{NodeCost, QuadraticCostInstance, SpatialCost, TemporalCost};
use crate::error::Result;
use crate::network::{build_network, NetworkSpec};

use super::config::SyntheticConfig;

/// Random instance: node targets follow a Gaussian random walk, node and
/// temporal weights are one.
pub fn synthetic_instance(config: &SyntheticConfig, seed: u64) -> Result<QuadraticCostInstance> {
    let network = match &config.edges {
        Some(edges) => build_network(config.agents, edges, config.dim)?,
        None => NetworkSpec::fully_connected(config.agents, config.dim)?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut draw = |scale: f64, len: usize| -> Vec<f64> {
        (0..len).map(|_| scale * unit.sample(&mut rng)).collect()
    };
    let (n, horizon) = (config.dim, config.horizon);

    let initial: Vec<Vec<f64>> = (0..config.agents).map(|_| draw(config.initial_std, n)).collect();
    let mut node = Vec::with_capacity(config.agents);
    for _ in 0..config.agents {
        let mut y = draw(1.0, n);
        let mut costs = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let step = draw(config.step_std, n);
            y.iter_mut().zip(&step).for_each(|(yi, si)| *yi += si);
            costs.push(NodeCost::new(y.clone(), 1.0));
        }
        node.push(costs);
    }
    let temporal = (0..config.agents)
        .map(|_| vec![TemporalCost::scalar(n, config.transition, 1.0); horizon])
        .collect();
    let spatial = (0..network.edges().len())
        .map(|_| {
            (0..horizon)
                .map(|_| SpatialCost::new(draw(config.offset_std, n), config.spatial_weight))
                .collect()
        })
        .collect();
    let instance = QuadraticCostInstance { network, horizon, initial, node, temporal, spatial };
    instance.validate()?;
    Ok(instance)
}
