use serde::{Deserialize, Serialize};

use crate::error::{LadoError, Result};

/// Actions `x_t^v` for every agent and every step `0..=horizon`.
///
/// Step 0 holds the initial action. Each agent's history is stored contiguously,
/// so the first `t` steps of one agent form a single slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    agent_count: usize,
    horizon: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Trajectory {
    pub fn zeros(agent_count: usize, horizon: usize, dim: usize) -> Self {
        Self {
            agent_count,
            horizon,
            dim,
            data: vec![0.0; agent_count * (horizon + 1) * dim],
        }
    }

    /// Trajectory whose step 0 is `initial[v]` and all later steps are zero.
    pub fn with_initial(initial: &[Vec<f64>], horizon: usize, dim: usize) -> Self {
        let mut traj = Self::zeros(initial.len(), horizon, dim);
        for (v, x0) in initial.iter().enumerate() {
            traj.set(v, 0, x0);
        }
        traj
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

    #[inline]
    fn offset(&self, agent: usize, t: usize) -> usize {
        debug_assert!(agent < self.agent_count && t <= self.horizon);
        (agent * (self.horizon + 1) + t) * self.dim
    }

    #[inline]
    pub fn get(&self, agent: usize, t: usize) -> &[f64] {
        let o = self.offset(agent, t);
        &self.data[o..o + self.dim]
    }

    pub fn set(&mut self, agent: usize, t: usize, x: &[f64]) {
        let o = self.offset(agent, t);
        self.data[o..o + self.dim].copy_from_slice(x);
    }

    /// Steps `0..steps` of one agent.
    pub fn prefix(&self, agent: usize, steps: usize) -> HistoryView<'_> {
        let start = self.offset(agent, 0);
        HistoryView {
            dim: self.dim,
            data: &self.data[start..start + steps * self.dim],
        }
    }

    /// Stacked decision variables `x_1..x_T` ordered by (t, agent, dim).
    pub fn decision_vector(&self) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.horizon * self.agent_count * self.dim);
        for t in 1..=self.horizon {
            for v in 0..self.agent_count {
                z.extend_from_slice(self.get(v, t));
            }
        }
        z
    }

    pub fn set_decision_vector(&mut self, z: &[f64]) -> Result<()> {
        let expected = self.horizon * self.agent_count * self.dim;
        if z.len() != expected {
            return Err(LadoError::DimensionMismatch(format!(
                "decision vector has {} entries, expected {expected}",
                z.len()
            )));
        }
        let n = self.dim;
        for t in 1..=self.horizon {
            for v in 0..self.agent_count {
                let i = ((t - 1) * self.agent_count + v) * n;
                self.set(v, t, &z[i..i + n]);
            }
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Trajectory) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Read-only view of one agent's first `len()` actions.
#[derive(Debug, Clone, Copy)]
pub struct HistoryView<'a> {
    dim: usize,
    data: &'a [f64],
}

impl<'a> HistoryView<'a> {
    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, step: usize) -> Option<&'a [f64]> {
        let start = step * self.dim;
        self.data.get(start..start + self.dim)
    }

    pub fn last(&self) -> Option<&'a [f64]> {
        self.len().checked_sub(1).and_then(|s| self.get(s))
    }
}
