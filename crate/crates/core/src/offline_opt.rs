//! Offline optimum of the full-horizon quadratic program.
//!
//! The global cost is `z^T A z - 2 b^T z + const` in the stacked decision vector
//! `z = (x_1, ..., x_T)`, ordered by (step, agent, dim). `A` is sparse, symmetric
//! and positive semidefinite; the optimum solves `A z = b`.

use std::collections::BTreeMap;

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::costs::{global_cost, QuadraticCostInstance};
use crate::error::{LadoError, Result};
use crate::trajectory::Trajectory;

/// Dense path is used up to this many decision variables.
pub const DENSE_LIMIT: usize = 512;
const TIKHONOV: f64 = 1e-12;
const CG_TOLERANCE: f64 = 1e-10;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub size: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    fn from_entries(size: usize, entries: &BTreeMap<(usize, usize), f64>) -> Self {
        let mut row_ptr = vec![0; size + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (&(r, c), &v) in entries {
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for r in 0..size {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { size, row_ptr, col_idx, values }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.size)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|k| self.values[k] * x[self.col_idx[k]])
                    .sum()
            })
            .collect()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        cols.binary_search(&c)
            .map(|k| self.values[self.row_ptr[r] + k])
            .unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.size).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for r in 0..self.size {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.col_idx[k])] = self.values[k];
            }
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }
}

/// Assembled normal equations of the global cost.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalQuadraticSystem {
    /// Half the Hessian.
    pub matrix: CsrMatrix,
    /// Half the negated linear term.
    pub rhs: Vec<f64>,
    pub constant: f64,
}

impl GlobalQuadraticSystem {
    pub fn assemble(instance: &QuadraticCostInstance) -> Result<Self> {
        instance.validate()?;
        let n = instance.dim();
        let v_count = instance.agent_count();
        let size = instance.decision_len();
        let block = |v: usize, t: usize| ((t - 1) * v_count + v) * n;
        let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut rhs = vec![0.0; size];
        let mut constant = 0.0;
        let mut add = |r: usize, c: usize, v: f64| {
            if v != 0.0 {
                *entries.entry((r, c)).or_insert(0.0) += v;
            }
        };

        for v in 0..v_count {
            for t in 1..=instance.horizon {
                let i = block(v, t);
                let f = &instance.node[v][t - 1];
                for d in 0..n {
                    add(i + d, i + d, f.weight);
                    rhs[i + d] += f.weight * f.target[d];
                    constant += f.weight * f.target[d] * f.target[d];
                }

                let c = &instance.temporal[v][t - 1];
                let w = c.weight;
                let m = &c.transition;
                for d in 0..n {
                    add(i + d, i + d, w);
                }
                if t == 1 {
                    let anchor = c.anchor(&instance.initial[v]);
                    for d in 0..n {
                        rhs[i + d] += w * anchor[d];
                        constant += w * anchor[d] * anchor[d];
                    }
                } else {
                    let j = block(v, t - 1);
                    for r in 0..n {
                        for col in 0..n {
                            // w * M^T M on the previous block
                            let mtm: f64 = (0..n).map(|k| m.get(k, r) * m.get(k, col)).sum();
                            add(j + r, j + col, w * mtm);
                            // -w * M coupling current with previous
                            add(i + r, j + col, -w * m.get(r, col));
                            add(j + col, i + r, -w * m.get(r, col));
                        }
                    }
                }
            }
        }
        for (e, edge) in instance.network.edges().iter().enumerate() {
            for t in 1..=instance.horizon {
                let s = &instance.spatial[e][t - 1];
                let (ia, ib) = (block(edge.a, t), block(edge.b, t));
                for d in 0..n {
                    add(ia + d, ia + d, s.weight);
                    add(ib + d, ib + d, s.weight);
                    add(ia + d, ib + d, -s.weight);
                    add(ib + d, ia + d, -s.weight);
                    rhs[ia + d] += s.weight * s.offset[d];
                    rhs[ib + d] -= s.weight * s.offset[d];
                    constant += s.weight * s.offset[d] * s.offset[d];
                }
            }
        }
        Ok(Self {
            matrix: CsrMatrix::from_entries(size, &entries),
            rhs,
            constant,
        })
    }

    pub fn size(&self) -> usize {
        self.matrix.size
    }

    /// `z^T A z - 2 b^T z + const`
    pub fn cost(&self, z: &[f64]) -> f64 {
        let az = self.matrix.mul_vec(z);
        let quad: f64 = z.iter().zip(&az).map(|(a, b)| a * b).sum();
        let lin: f64 = z.iter().zip(&self.rhs).map(|(a, b)| a * b).sum();
        quad - 2.0 * lin + self.constant
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverPath {
    /// Dense Cholesky up to [`DENSE_LIMIT`] variables, preconditioned CG beyond.
    Auto,
    Dense,
    ConjugateGradient,
}

#[derive(Debug, Clone)]
pub struct OptSolution {
    pub trajectory: Trajectory,
    pub cost: f64,
    pub regularized: bool,
    pub iterations: usize,
}

pub fn solve_opt(instance: &QuadraticCostInstance) -> Result<Trajectory> {
    Ok(solve_opt_with(instance, SolverPath::Auto)?.trajectory)
}

pub fn solve_opt_with(instance: &QuadraticCostInstance, path: SolverPath) -> Result<OptSolution> {
    let system = GlobalQuadraticSystem::assemble(instance)?;
    let size = system.size();
    let dense = match path {
        SolverPath::Auto => size <= DENSE_LIMIT,
        SolverPath::Dense => true,
        SolverPath::ConjugateGradient => false,
    };
    let (z, regularized, iterations) = if dense {
        let (z, reg) = dense_solve(&system)?;
        (z, reg, 1)
    } else {
        conjugate_gradient(&system)?
    };
    let mut trajectory = instance.empty_trajectory();
    trajectory.set_decision_vector(&z)?;
    if !trajectory.is_finite() {
        return Err(LadoError::SolveFailed("non-finite optimum".into()));
    }
    let cost = global_cost(instance, &trajectory)?;
    Ok(OptSolution { trajectory, cost, regularized, iterations })
}

fn dense_solve(system: &GlobalQuadraticSystem) -> Result<(Vec<f64>, bool)> {
    let a = system.matrix.to_dense();
    let b = DVector::from_column_slice(&system.rhs);
    if let Some(chol) = a.clone().cholesky() {
        return Ok((chol.solve(&b).iter().copied().collect(), false));
    }
    warn!("global system is singular; applying Tikhonov regularization {TIKHONOV:e}");
    let n = system.size();
    let reg = a + DMatrix::<f64>::identity(n, n) * TIKHONOV;
    let chol = reg
        .cholesky()
        .ok_or_else(|| LadoError::SolveFailed("system singular after regularization".into()))?;
    Ok((chol.solve(&b).iter().copied().collect(), true))
}

/// Jacobi-preconditioned conjugate gradient on `A z = b`.
fn conjugate_gradient(system: &GlobalQuadraticSystem) -> Result<(Vec<f64>, bool, usize)> {
    let n = system.size();
    let mut diag = system.matrix.diagonal();
    let regularized = diag.iter().any(|d| *d <= 0.0);
    let shift = if regularized {
        warn!("global system has flat coordinates; applying Tikhonov regularization {TIKHONOV:e}");
        TIKHONOV
    } else {
        0.0
    };
    diag.iter_mut().for_each(|d| *d += shift);
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y = system.matrix.mul_vec(x);
        if shift > 0.0 {
            y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += shift * xi);
        }
        y
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let b = &system.rhs;
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((x, regularized, 0));
    }
    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let max_iter = 50 * n.max(1);
    for it in 1..=max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(LadoError::SolveFailed(format!("CG breakdown at iteration {it}")));
        }
        let alpha = rz / pap;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
        if dot(&r, &r).sqrt() <= CG_TOLERANCE * b_norm {
            return Ok((x, regularized, it));
        }
        z = r.iter().zip(&diag).map(|(ri, d)| ri / d).collect();
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    Err(LadoError::SolveFailed(format!("CG did not converge in {max_iter} iterations")))
}

/// Largest number of decision variables [`brute_force_opt`] accepts.
pub const BRUTE_FORCE_MAX_DIM: usize = 6;

/// Grid argmin of the global cost over `[lo, hi]^(V T n)`.
///
/// Evaluates the cost through [`global_cost`] directly, independent of the
/// assembled system.
pub fn brute_force_opt(
    instance: &QuadraticCostInstance,
    lo: f64,
    hi: f64,
    resolution: f64,
) -> Result<(Trajectory, f64)> {
    instance.validate()?;
    let dims = instance.decision_len();
    if dims > BRUTE_FORCE_MAX_DIM {
        return Err(LadoError::InvalidArgument(format!(
            "brute force supports at most {BRUTE_FORCE_MAX_DIM} variables, instance has {dims}"
        )));
    }
    if !(resolution > 0.0) || !(hi >= lo) {
        return Err(LadoError::InvalidArgument("grid needs resolution > 0 and hi >= lo".into()));
    }
    let points = ((hi - lo) / resolution).round() as usize + 1;
    let grid: Vec<f64> = (0..points).map(|k| lo + k as f64 * resolution).collect();
    let mut index = vec![0usize; dims];
    let mut traj = instance.empty_trajectory();
    let mut z = vec![grid[0]; dims];
    let mut best = (f64::INFINITY, z.clone());
    loop {
        for (zi, k) in z.iter_mut().zip(&index) {
            *zi = grid[*k];
        }
        traj.set_decision_vector(&z)?;
        let cost = global_cost(instance, &traj)?;
        if cost < best.0 {
            best = (cost, z.clone());
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == dims {
                traj.set_decision_vector(&best.1)?;
                return Ok((traj, best.0));
            }
            index[pos] += 1;
            if index[pos] < points {
                break;
            }
            index[pos] = 0;
            pos += 1;
        }
    }
}

/// Upper bound on `cost(nearest grid point) - cost(optimum)` for an optimum
/// inside the grid box: `L/2 * dims * (h/2)^2` with `L` the largest Hessian
/// eigenvalue.
pub fn grid_error_bound(instance: &QuadraticCostInstance, resolution: f64) -> Result<f64> {
    let system = GlobalQuadraticSystem::assemble(instance)?;
    let hessian = system.matrix.to_dense() * 2.0;
    let l_max = nalgebra::SymmetricEigen::new(hessian)
        .eigenvalues
        .iter()
        .copied()
        .fold(0.0, f64::max);
    let dims = system.size() as f64;
    Ok(0.5 * l_max * dims * (0.5 * resolution).powi(2))
}
