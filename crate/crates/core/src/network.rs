//! Agent graph and the one-step-delayed information model.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::costs::{NodeCost, SpatialCost, TemporalCost};
use crate::trajectory::HistoryView;
use crate::error::{LadoError, Result};

/// Undirected edge stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incidence {
    pub edge: usize,
    pub neighbor: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NetworkConfig {
    agent_count: usize,
    action_dim: usize,
    #[serde(default)]
    edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkConfig", into = "NetworkConfig")]
pub struct NetworkSpec {
    agent_count: usize,
    action_dim: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<Incidence>>,
}

impl TryFrom<NetworkConfig> for NetworkSpec {
    type Error = LadoError;

    fn try_from(cfg: NetworkConfig) -> Result<Self> {
        build_network(cfg.agent_count, &cfg.edges, cfg.action_dim)
    }
}

impl From<NetworkSpec> for NetworkConfig {
    fn from(net: NetworkSpec) -> Self {
        NetworkConfig {
            agent_count: net.agent_count,
            action_dim: net.action_dim,
            edges: net.edges.iter().map(|e| (e.a, e.b)).collect(),
        }
    }
}

/// Validates the edge list and builds adjacency lists.
///
/// Edges are canonicalized to `(min, max)` and kept in the order given.
pub fn build_network(
    agent_count: usize,
    edges: &[(usize, usize)],
    action_dim: usize,
) -> Result<NetworkSpec> {
    if agent_count == 0 {
        return Err(LadoError::InvalidNetwork("agent_count must be positive".into()));
    }
    if action_dim == 0 {
        return Err(LadoError::InvalidNetwork("action_dim must be positive".into()));
    }
    let mut seen = BTreeSet::new();
    let mut canonical = Vec::with_capacity(edges.len());
    let mut adjacency = vec![Vec::new(); agent_count];
    for &(u, v) in edges {
        if u >= agent_count || v >= agent_count {
            return Err(LadoError::InvalidNetwork(format!(
                "edge ({u},{v}) references an agent outside 0..{agent_count}"
            )));
        }
        if u == v {
            return Err(LadoError::InvalidNetwork(format!("self-loop at agent {u}")));
        }
        let edge = Edge { a: u.min(v), b: u.max(v) };
        if !seen.insert(edge) {
            return Err(LadoError::InvalidNetwork(format!(
                "duplicate edge ({},{})",
                edge.a, edge.b
            )));
        }
        let idx = canonical.len();
        canonical.push(edge);
        adjacency[edge.a].push(Incidence { edge: idx, neighbor: edge.b });
        adjacency[edge.b].push(Incidence { edge: idx, neighbor: edge.a });
    }
    Ok(NetworkSpec {
        agent_count,
        action_dim,
        edges: canonical,
        adjacency,
    })
}

impl NetworkSpec {
    pub fn fully_connected(agent_count: usize, action_dim: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for a in 0..agent_count {
            for b in a + 1..agent_count {
                edges.push((a, b));
            }
        }
        build_network(agent_count, &edges, action_dim)
    }

    pub fn agent_count(&self) -> usize {
        self.agent_count
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn incident(&self, agent: usize) -> &[Incidence] {
        &self.adjacency[agent]
    }

    pub fn degree(&self, agent: usize) -> usize {
        self.adjacency[agent].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// What one neighbor contributes to an agent's information set at step `t`.
#[derive(Debug, Clone)]
pub struct NeighborObservation<'a> {
    pub neighbor: usize,
    pub edge: usize,
    /// True when the observing agent is the edge's first endpoint.
    pub observer_is_first: bool,
    /// Spatial costs for steps `1..t` (index 0 is step 1).
    pub spatial: &'a [SpatialCost],
    /// Neighbor actions for steps `0..t`.
    pub actual: HistoryView<'a>,
    /// Neighbor expert actions for steps `0..t`.
    pub expert: HistoryView<'a>,
}

/// Everything agent `v` may use when choosing `x_t^v`.
///
/// Neighbor data stops at step `t - 1`; the slices simply do not reach step `t`.
#[derive(Debug, Clone)]
pub struct LocalObservation<'a> {
    pub agent: usize,
    pub t: usize,
    pub dim: usize,
    /// Own node costs for steps `1..=t` (index 0 is step 1).
    pub node: &'a [NodeCost],
    /// Own temporal costs for steps `1..=t`.
    pub temporal: &'a [TemporalCost],
    /// Own actions, expert actions and ML actions for steps `0..t`.
    pub own_actual: HistoryView<'a>,
    pub own_expert: HistoryView<'a>,
    pub own_ml: HistoryView<'a>,
    pub neighbors: Vec<NeighborObservation<'a>>,
}

impl<'a> LocalObservation<'a> {
    pub fn node_now(&self) -> &'a NodeCost {
        &self.node[self.t - 1]
    }

    pub fn temporal_now(&self) -> &'a TemporalCost {
        &self.temporal[self.t - 1]
    }

    pub fn degree(&self) -> usize {
        self.neighbors.len()
    }
}
