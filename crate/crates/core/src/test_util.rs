use crate::costs::{NodeCost, QuadraticCostInstance, SpatialCost, TemporalCost};
use crate::network::build_network;

/// Scalar instance with constant weights and explicit per-step targets.
pub fn scalar_instance(
    agents: usize,
    edges: &[(usize, usize)],
    targets: &[Vec<f64>],
    initial: &[f64],
    temporal_weight: f64,
    spatial_weight: f64,
) -> QuadraticCostInstance {
    let network = build_network(agents, edges, 1).unwrap();
    let horizon = targets[0].len();
    QuadraticCostInstance {
        horizon,
        initial: initial.iter().map(|x| vec![*x]).collect(),
        node: targets
            .iter()
            .map(|ys| ys.iter().map(|y| NodeCost::new(vec![*y], 1.0)).collect())
            .collect(),
        temporal: (0..agents)
            .map(|_| vec![TemporalCost::scalar(1, 1.0, temporal_weight); horizon])
            .collect(),
        spatial: (0..network.edges().len())
            .map(|_| vec![SpatialCost::new(vec![0.0], spatial_weight); horizon])
            .collect(),
        network,
    }
}
