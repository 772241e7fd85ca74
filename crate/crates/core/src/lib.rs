//! Learning-augmented decentralized online convex optimization.
//!
//! Agents on a network each pick an action per step and pay a node cost, a
//! temporal switching cost and spatial costs shared with neighbors. LADO lets
//! every agent follow untrusted ML advice while keeping its cumulative cost
//! within `(1 + lambda)` of an expert policy, using only information that is
//! one step old.

pub mod battery;
pub mod bounds;
pub mod costs;
pub mod engine;
pub mod error;
pub mod harness;
pub mod lado;
pub mod network;
pub mod offline_opt;
pub mod policies;
pub mod trajectory;
pub mod vector;

#[cfg(test)]
mod test_util;

pub use costs::{
    global_cost, local_cost, smoothness_of, NodeCost, QuadraticCostInstance, SmoothnessParams,
    SpatialCost, TemporalCost,
};
pub use engine::{simulate, Combiner, EpisodeOutcome, EpisodeState, SimOptions};
pub use bounds::{bound_aware, bound_blackbox, BoundInputs};
pub use error::{LadoError, Result};
pub use lado::{
    edge_split, lado_step, optimal_lambda0, project_to_robust_set, reservation_cost,
    splitting_weight, AgentLedger, Lambda0Mode, RobustnessConfig,
};
pub use harness::{run_batch, RunConfig};
pub use network::{build_network, Edge, LocalObservation, NetworkSpec};
pub use offline_opt::{brute_force_opt, solve_opt};
pub use policies::{MlPolicy, Policy, PolicyKind, PredictionSet};
pub use trajectory::Trajectory;
