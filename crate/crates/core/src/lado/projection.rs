//! Euclidean projection onto a convex quadratic sublevel set `{ z : q(z) <= B }`.

use nalgebra::{DMatrix, DVector};

use crate::error::{LadoError, Result};
use crate::vector::{dist_sq, SquareMatrix};

/// Step-`t` robust set of one agent, `q(z) <= bound` with
/// `q(z) = 0.5 (z - center)^T H (z - center) + min_value`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustSetHalfspaceData {
    pub hessian: SquareMatrix,
    pub center: Vec<f64>,
    pub min_value: f64,
    pub bound: f64,
}

impl RobustSetHalfspaceData {
    /// Builds `q(z) = sum_k w_k |z - c_k|^2` from weighted squared distances.
    ///
    /// With all weights zero the center is `fallback` and `q` is identically zero.
    pub fn from_squared_terms(terms: &[(f64, &[f64])], fallback: &[f64], bound: f64) -> Self {
        let dim = fallback.len();
        let total: f64 = terms.iter().map(|(w, _)| w).sum();
        if !(total > 0.0) {
            return Self {
                hessian: SquareMatrix::scaled_identity(dim, 0.0),
                center: fallback.to_vec(),
                min_value: 0.0,
                bound,
            };
        }
        let mut center = vec![0.0; dim];
        for (w, c) in terms {
            for (m, ci) in center.iter_mut().zip(c.iter()) {
                *m += w * ci;
            }
        }
        center.iter_mut().for_each(|m| *m /= total);
        let min_value = terms.iter().map(|(w, c)| w * dist_sq(&center, c)).sum();
        Self {
            hessian: SquareMatrix::scaled_identity(dim, 2.0 * total),
            center,
            min_value,
            bound,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn q(&self, z: &[f64]) -> f64 {
        let d: Vec<f64> = z.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let hd = self.hessian.mul_vec(&d);
        0.5 * d.iter().zip(&hd).map(|(a, b)| a * b).sum::<f64>() + self.min_value
    }

    pub fn slack(&self, z: &[f64]) -> f64 {
        self.q(z) - self.bound
    }

    fn isotropic_curvature(&self) -> Option<f64> {
        let n = self.hessian.dim;
        let h0 = self.hessian.get(0, 0);
        for i in 0..n {
            for j in 0..n {
                let expected = if i == j { h0 } else { 0.0 };
                if self.hessian.get(i, j) != expected {
                    return None;
                }
            }
        }
        Some(h0)
    }

    fn is_flat(&self) -> bool {
        self.hessian.data.iter().all(|h| *h == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: Vec<f64>,
    /// KKT multiplier of the active constraint (zero when the target was feasible).
    pub multiplier: f64,
    pub iterations: usize,
}

const MAX_ITERATIONS: usize = 400;

/// Solves `argmin_{q(z) <= B} |z - target|^2`.
///
/// Returns the target unchanged when it is feasible. Otherwise the multiplier of
/// the KKT system `(2I + mu H) z = 2 target + mu H center` is found by bracketed
/// Newton on the strictly decreasing `phi(mu) = q(z(mu)) - B`. The returned point
/// always satisfies `phi <= 0` up to rounding in `q`.
///
/// Fails with `InvalidArgument` when the set is empty (`min q > B`).
pub fn project_to_robust_set(target: &[f64], set: &RobustSetHalfspaceData) -> Result<Projection> {
    if target.len() != set.dim() {
        return Err(LadoError::DimensionMismatch(format!(
            "target has dimension {}, robust set has {}",
            target.len(),
            set.dim()
        )));
    }
    if set.slack(target) <= 0.0 {
        return Ok(Projection { point: target.to_vec(), multiplier: 0.0, iterations: 0 });
    }
    if set.is_flat() || set.min_value > set.bound {
        return Err(LadoError::InvalidArgument(format!(
            "robust set is empty: min q = {:e} exceeds bound {:e}",
            set.min_value, set.bound
        )));
    }

    let solver = KktSolver::new(target, set);
    let tol = 1e-10 * set.bound.abs().max(1.0);

    // phi(0) > 0 here; grow the upper end until the constraint holds.
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let mut iterations = 0;
    let mut hi_point = solver.point(hi);
    let mut hi_phi = set.slack(&hi_point);
    while hi_phi > 0.0 {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        if iterations > 2000 || !hi.is_finite() {
            return Ok(Projection {
                point: set.center.clone(),
                multiplier: f64::INFINITY,
                iterations,
            });
        }
        hi_point = solver.point(hi);
        hi_phi = set.slack(&hi_point);
    }
    if hi_phi.abs() <= tol {
        return Ok(Projection { point: hi_point, multiplier: hi, iterations });
    }

    let mut mu = hi;
    let mut phi = hi_phi;
    let mut point = hi_point.clone();
    for _ in 0..MAX_ITERATIONS {
        iterations += 1;
        let deriv = solver.phi_derivative(mu, &point, set);
        let newton = if deriv < 0.0 { mu - phi / deriv } else { f64::NAN };
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        mu = next;
        point = solver.point(mu);
        phi = set.slack(&point);
        if phi <= 0.0 {
            hi = mu;
            hi_point = point.clone();
            if phi.abs() <= tol {
                break;
            }
        } else {
            lo = mu;
        }
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    Ok(Projection { point: hi_point, multiplier: hi, iterations })
}

enum KktSolver<'a> {
    Isotropic { target: &'a [f64], center: &'a [f64], curvature: f64 },
    General { target: DVector<f64>, hessian: DMatrix<f64>, h_center: DVector<f64> },
}

impl<'a> KktSolver<'a> {
    fn new(target: &'a [f64], set: &'a RobustSetHalfspaceData) -> Self {
        match set.isotropic_curvature() {
            Some(curvature) => KktSolver::Isotropic { target, center: &set.center, curvature },
            None => {
                let hessian = set.hessian.to_nalgebra();
                let h_center = &hessian * DVector::from_column_slice(&set.center);
                KktSolver::General {
                    target: DVector::from_column_slice(target),
                    hessian,
                    h_center,
                }
            }
        }
    }

    fn system(&self, mu: f64) -> Option<DMatrix<f64>> {
        match self {
            KktSolver::Isotropic { .. } => None,
            KktSolver::General { hessian, .. } => {
                let n = hessian.nrows();
                Some(DMatrix::<f64>::identity(n, n) * 2.0 + hessian * mu)
            }
        }
    }

    fn point(&self, mu: f64) -> Vec<f64> {
        match self {
            KktSolver::Isotropic { target, center, curvature } => {
                let s = 0.5 * mu * curvature;
                target.iter().zip(center.iter()).map(|(x, m)| (x + s * m) / (1.0 + s)).collect()
            }
            KktSolver::General { target, h_center, .. } => {
                let a = self.system(mu).expect("general system");
                let rhs = target * 2.0 + h_center * mu;
                let sol = a
                    .clone()
                    .cholesky()
                    .map(|c| c.solve(&rhs))
                    .or_else(|| a.lu().solve(&rhs))
                    .unwrap_or_else(|| rhs.clone());
                sol.iter().copied().collect()
            }
        }
    }

    /// `phi'(mu) = -grad_q^T (2I + mu H)^{-1} grad_q`.
    fn phi_derivative(&self, mu: f64, point: &[f64], set: &RobustSetHalfspaceData) -> f64 {
        let d: Vec<f64> = point.iter().zip(&set.center).map(|(a, b)| a - b).collect();
        let grad = set.hessian.mul_vec(&d);
        match self {
            KktSolver::Isotropic { curvature, .. } => {
                -grad.iter().map(|g| g * g).sum::<f64>() / (2.0 + mu * curvature)
            }
            KktSolver::General { .. } => {
                let a = self.system(mu).expect("general system");
                let g = DVector::from_column_slice(&grad);
                match a.cholesky() {
                    Some(c) => -g.dot(&c.solve(&g)),
                    None => f64::NAN,
                }
            }
        }
    }
}
