//! Convex quadratic node, temporal and spatial costs.

use serde::{Deserialize, Serialize};

use crate::error::{LadoError, Result};
use crate::network::NetworkSpec;
use crate::trajectory::Trajectory;
use crate::vector::{dist_sq, SquareMatrix};

/// `f(x) = weight * |x - target|^2`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeCost {
    pub target: Vec<f64>,
    pub weight: f64,
}

impl NodeCost {
    pub fn new(target: Vec<f64>, weight: f64) -> Self {
        Self { target, weight }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.weight * dist_sq(x, &self.target)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.target)
            .map(|(xi, yi)| 2.0 * self.weight * (xi - yi))
            .collect()
    }

    pub fn smoothness(&self) -> f64 {
        2.0 * self.weight
    }
}

/// `c(x, x_prev) = weight * |x - M x_prev|^2`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalCost {
    pub transition: SquareMatrix,
    pub weight: f64,
}

impl TemporalCost {
    pub fn new(transition: SquareMatrix, weight: f64) -> Self {
        Self { transition, weight }
    }

    /// Scalar-transition cost `weight * |x - a x_prev|^2` in dimension `dim`.
    pub fn scalar(dim: usize, a: f64, weight: f64) -> Self {
        Self::new(SquareMatrix::scaled_identity(dim, a), weight)
    }

    /// `M x_prev`, the anchor the current action is pulled towards.
    pub fn anchor(&self, prev: &[f64]) -> Vec<f64> {
        self.transition.mul_vec(prev)
    }

    pub fn eval(&self, x: &[f64], prev: &[f64]) -> f64 {
        self.weight * dist_sq(x, &self.anchor(prev))
    }

    /// Gradients with respect to `x` and `x_prev`.
    pub fn gradient(&self, x: &[f64], prev: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let r: Vec<f64> = x
            .iter()
            .zip(self.anchor(prev))
            .map(|(xi, ai)| 2.0 * self.weight * (xi - ai))
            .collect();
        let g_prev = self.transition.transpose_mul_vec(&r).into_iter().map(|g| -g).collect();
        (r, g_prev)
    }

    /// Largest eigenvalue of the joint Hessian in `(x, x_prev)`.
    pub fn smoothness(&self) -> f64 {
        2.0 * self.weight * joint_unit_hessian_max_eigenvalue(&self.transition)
    }
}

/// Largest eigenvalue of `[[I, -M], [-M^T, M^T M]]`.
///
/// Closed form `1 + m^2` for scalar `M`; a symmetric eigen-decomposition otherwise.
pub fn joint_unit_hessian_max_eigenvalue(m: &SquareMatrix) -> f64 {
    let n = m.dim;
    if n == 1 {
        let a = m.data[0];
        return 1.0 + a * a;
    }
    let mut h = nalgebra::DMatrix::<f64>::zeros(2 * n, 2 * n);
    let mm = m.to_nalgebra();
    let mtm = mm.transpose() * &mm;
    for i in 0..n {
        h[(i, i)] = 1.0;
        for j in 0..n {
            h[(i, n + j)] = -mm[(i, j)];
            h[(n + j, i)] = -mm[(i, j)];
            h[(n + i, n + j)] = mtm[(i, j)];
        }
    }
    nalgebra::SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `s(x_a, x_b) = weight * |x_a - x_b - offset|^2` for an edge stored as `(a, b)`, `a < b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialCost {
    pub offset: Vec<f64>,
    pub weight: f64,
}

impl SpatialCost {
    pub fn new(offset: Vec<f64>, weight: f64) -> Self {
        Self { offset, weight }
    }

    pub fn eval(&self, xa: &[f64], xb: &[f64]) -> f64 {
        self.weight
            * xa
                .iter()
                .zip(xb)
                .zip(&self.offset)
                .map(|((a, b), d)| (a - b - d) * (a - b - d))
                .sum::<f64>()
    }

    /// Evaluates with the observer's own action first.
    pub fn eval_oriented(&self, own: &[f64], other: &[f64], observer_is_first: bool) -> f64 {
        if observer_is_first {
            self.eval(own, other)
        } else {
            self.eval(other, own)
        }
    }

    /// Point `own` is pulled towards when the other endpoint sits at `other`.
    pub fn anchor_for(&self, other: &[f64], observer_is_first: bool) -> Vec<f64> {
        let sign = if observer_is_first { 1.0 } else { -1.0 };
        other.iter().zip(&self.offset).map(|(o, d)| o + sign * d).collect()
    }

    pub fn gradient(&self, xa: &[f64], xb: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let ga: Vec<f64> = xa
            .iter()
            .zip(xb)
            .zip(&self.offset)
            .map(|((a, b), d)| 2.0 * self.weight * (a - b - d))
            .collect();
        let gb = ga.iter().map(|g| -g).collect();
        (ga, gb)
    }

    pub fn smoothness(&self) -> f64 {
        4.0 * self.weight
    }
}

/// A full problem instance `g_{1:T}` on a fixed network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticCostInstance {
    pub network: NetworkSpec,
    pub horizon: usize,
    /// `x_0^v` per agent.
    pub initial: Vec<Vec<f64>>,
    /// `node[v][t - 1]`
    pub node: Vec<Vec<NodeCost>>,
    /// `temporal[v][t - 1]`
    pub temporal: Vec<Vec<TemporalCost>>,
    /// `spatial[e][t - 1]`, indexed like `network.edges()`.
    pub spatial: Vec<Vec<SpatialCost>>,
}

impl QuadraticCostInstance {
    pub fn validate(&self) -> Result<()> {
        let v_count = self.network.agent_count();
        let n = self.network.action_dim();
        let t_count = self.horizon;
        let bad = |msg: String| Err(LadoError::DimensionMismatch(msg));
        if t_count == 0 {
            return Err(LadoError::InvalidArgument("horizon must be positive".into()));
        }
        if self.initial.len() != v_count || self.initial.iter().any(|x| x.len() != n) {
            return bad("initial actions must cover every agent with dimension n".into());
        }
        if self.node.len() != v_count || self.temporal.len() != v_count {
            return bad("node/temporal costs must cover every agent".into());
        }
        if self.spatial.len() != self.network.edges().len() {
            return bad("spatial costs must cover every edge".into());
        }
        for v in 0..v_count {
            if self.node[v].len() != t_count || self.temporal[v].len() != t_count {
                return bad(format!("agent {v}: costs must cover all {t_count} steps"));
            }
            for (t, f) in self.node[v].iter().enumerate() {
                if f.target.len() != n || !(f.weight >= 0.0) {
                    return bad(format!("agent {v}, step {}: malformed node cost", t + 1));
                }
            }
            for (t, c) in self.temporal[v].iter().enumerate() {
                if c.transition.dim != n || !c.transition.is_well_formed() || !(c.weight >= 0.0) {
                    return bad(format!("agent {v}, step {}: malformed temporal cost", t + 1));
                }
            }
        }
        for (e, costs) in self.spatial.iter().enumerate() {
            if costs.len() != t_count {
                return bad(format!("edge {e}: spatial costs must cover all {t_count} steps"));
            }
            if costs.iter().any(|s| s.offset.len() != n || !(s.weight >= 0.0)) {
                return bad(format!("edge {e}: malformed spatial cost"));
            }
        }
        Ok(())
    }

    pub fn agent_count(&self) -> usize {
        self.network.agent_count()
    }

    pub fn dim(&self) -> usize {
        self.network.action_dim()
    }

    pub fn decision_len(&self) -> usize {
        self.horizon * self.agent_count() * self.dim()
    }

    pub fn empty_trajectory(&self) -> Trajectory {
        Trajectory::with_initial(&self.initial, self.horizon, self.dim())
    }

    /// Node plus temporal cost of agent `v` at step `t`.
    pub fn own_cost(&self, traj: &Trajectory, v: usize, t: usize) -> f64 {
        self.node[v][t - 1].eval(traj.get(v, t))
            + self.temporal[v][t - 1].eval(traj.get(v, t), traj.get(v, t - 1))
    }

    pub fn spatial_cost(&self, traj: &Trajectory, edge: usize, t: usize) -> f64 {
        let e = self.network.edges()[edge];
        self.spatial[edge][t - 1].eval(traj.get(e.a, t), traj.get(e.b, t))
    }
}

fn check_trajectory(instance: &QuadraticCostInstance, traj: &Trajectory) -> Result<()> {
    if traj.agent_count() != instance.agent_count()
        || traj.horizon() != instance.horizon
        || traj.dim() != instance.dim()
    {
        return Err(LadoError::DimensionMismatch(format!(
            "trajectory shape ({}, {}, {}) does not match instance ({}, {}, {})",
            traj.agent_count(),
            traj.horizon(),
            traj.dim(),
            instance.agent_count(),
            instance.horizon,
            instance.dim()
        )));
    }
    Ok(())
}

/// Global cost `g_t(x_t)` at one step.
pub fn step_cost(instance: &QuadraticCostInstance, traj: &Trajectory, t: usize) -> f64 {
    let own: f64 = (0..instance.agent_count()).map(|v| instance.own_cost(traj, v, t)).sum();
    let spatial: f64 = (0..instance.network.edges().len())
        .map(|e| instance.spatial_cost(traj, e, t))
        .sum();
    own + spatial
}

/// Total cost of a trajectory over steps `1..=T`.
pub fn global_cost(instance: &QuadraticCostInstance, traj: &Trajectory) -> Result<f64> {
    check_trajectory(instance, traj)?;
    Ok((1..=instance.horizon).map(|t| step_cost(instance, traj, t)).sum())
}

/// Local cost `g_t^v` with spatial costs split by `weights`.
///
/// `weights[k]` is agent `v`'s share of the edge `network.incident(v)[k]`.
pub fn local_cost(
    instance: &QuadraticCostInstance,
    traj: &Trajectory,
    v: usize,
    t: usize,
    weights: &[f64],
) -> Result<f64> {
    check_trajectory(instance, traj)?;
    if t == 0 || t > instance.horizon {
        return Err(LadoError::StepOutOfRange { t, horizon: instance.horizon });
    }
    let incident = instance.network.incident(v);
    if weights.len() != incident.len() {
        return Err(LadoError::InvalidArgument(format!(
            "agent {v} has {} incident edges but {} splitting weights were given",
            incident.len(),
            weights.len()
        )));
    }
    if let Some(k) = weights.iter().find(|k| !(0.0..=1.0).contains(*k)) {
        return Err(LadoError::InvalidArgument(format!("splitting weight {k} outside [0, 1]")));
    }
    let spatial: f64 = incident
        .iter()
        .zip(weights)
        .map(|(inc, k)| k * instance.spatial_cost(traj, inc.edge, t))
        .sum();
    Ok(instance.own_cost(traj, v, t) + spatial)
}

/// Gradient of the global cost with respect to the stacked decision vector,
/// accumulated term by term (independent of any assembled matrix).
pub fn global_gradient(instance: &QuadraticCostInstance, traj: &Trajectory) -> Result<Vec<f64>> {
    check_trajectory(instance, traj)?;
    let n = instance.dim();
    let v_count = instance.agent_count();
    let mut grad = vec![0.0; instance.decision_len()];
    let idx = |v: usize, t: usize| ((t - 1) * v_count + v) * n;
    let add = |grad: &mut Vec<f64>, v: usize, t: usize, g: &[f64]| {
        if t == 0 {
            return;
        }
        let i = idx(v, t);
        for (gi, x) in grad[i..i + n].iter_mut().zip(g) {
            *gi += x;
        }
    };
    for t in 1..=instance.horizon {
        for v in 0..v_count {
            add(&mut grad, v, t, &instance.node[v][t - 1].gradient(traj.get(v, t)));
            let (gx, gp) = instance.temporal[v][t - 1].gradient(traj.get(v, t), traj.get(v, t - 1));
            add(&mut grad, v, t, &gx);
            add(&mut grad, v, t - 1, &gp);
        }
        for (e, edge) in instance.network.edges().iter().enumerate() {
            let (ga, gb) = instance.spatial[e][t - 1].gradient(traj.get(edge.a, t), traj.get(edge.b, t));
            add(&mut grad, edge.a, t, &ga);
            add(&mut grad, edge.b, t, &gb);
        }
    }
    Ok(grad)
}

/// Network-wide smoothness constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessParams {
    pub node: f64,
    pub temporal: f64,
    pub spatial: f64,
}

impl SmoothnessParams {
    /// `l_f + 2 l_T + l_S * degree`, the smoothness scale used by the bounds.
    pub fn combined(&self, degree: usize) -> f64 {
        self.node + 2.0 * self.temporal + self.spatial * degree as f64
    }

    pub fn max(&self, other: &SmoothnessParams) -> SmoothnessParams {
        SmoothnessParams {
            node: self.node.max(other.node),
            temporal: self.temporal.max(other.temporal),
            spatial: self.spatial.max(other.spatial),
        }
    }
}

/// Maximum smoothness of each cost family over the whole instance.
pub fn smoothness_of(instance: &QuadraticCostInstance) -> SmoothnessParams {
    let node = instance
        .node
        .iter()
        .flatten()
        .map(NodeCost::smoothness)
        .fold(0.0, f64::max);
    let temporal = instance
        .temporal
        .iter()
        .flatten()
        .map(TemporalCost::smoothness)
        .fold(0.0, f64::max);
    let spatial = instance
        .spatial
        .iter()
        .flatten()
        .map(SpatialCost::smoothness)
        .fold(0.0, f64::max);
    SmoothnessParams { node, temporal, spatial }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_network;
    use crate::test_util::scalar_instance;
    use proptest::prelude::*;

    fn random_instance(v: usize, edges: &[(usize, usize)], horizon: usize, n: usize, vals: &[f64]) -> QuadraticCostInstance {
        let network = build_network(v, edges, n).unwrap();
        let mut k = 0;
        let mut next = || {
            k += 1;
            vals[k % vals.len()]
        };
        let mut vec_n = |_: usize| (0..n).map(|_| next()).collect::<Vec<_>>();
        let initial = (0..v).map(&mut vec_n).collect();
        let node = (0..v)
            .map(|_| (0..horizon).map(|_| NodeCost::new(vec_n(0), 1.0 + vals[0].abs())).collect())
            .collect();
        let m_rows: Vec<Vec<f64>> = (0..n).map(|_| vec_n(0)).collect();
        let temporal = (0..v)
            .map(|_| vec![TemporalCost::new(SquareMatrix::from_rows(&m_rows), 0.5 + vals[1].abs()); horizon])
            .collect();
        let spatial = (0..network.edges().len())
            .map(|_| (0..horizon).map(|_| SpatialCost::new(vec_n(0), vals[2].abs())).collect())
            .collect();
        QuadraticCostInstance { network, horizon, initial, node, temporal, spatial }
    }

    fn filled(inst: &QuadraticCostInstance, vals: &[f64]) -> Trajectory {
        let mut tr = inst.empty_trajectory();
        let z: Vec<f64> = (0..inst.decision_len()).map(|i| vals[(i * 7 + 3) % vals.len()]).collect();
        tr.set_decision_vector(&z).unwrap();
        tr
    }

    #[test]
    fn global_cost_examples() {
        let zero = scalar_instance(2, &[(0, 1)], &[vec![0.0; 3], vec![0.0; 3]], &[0.0, 0.0], 1.0, 1.0);
        assert_eq!(global_cost(&zero, &zero.empty_trajectory()).unwrap(), 0.0);

        let one = scalar_instance(1, &[], &[vec![1.0]], &[0.0], 1.0, 0.0);
        let mut tr = one.empty_trajectory();
        tr.set(0, 1, &[1.0]);
        assert_eq!(global_cost(&one, &tr).unwrap(), 1.0);

        let wrong = Trajectory::zeros(2, 1, 1);
        assert!(global_cost(&one, &wrong).is_err());
    }

    #[test]
    fn smoothness_examples() {
        let inst = scalar_instance(2, &[(0, 1)], &[vec![0.0], vec![0.0]], &[0.0, 0.0], 1.0, 1.0);
        let s = smoothness_of(&inst);
        assert_eq!((s.node, s.temporal, s.spatial), (2.0, 4.0, 4.0));
        let m = SquareMatrix::from_rows(&[vec![0.0, 2.0], vec![0.0, 0.0]]);
        // sigma_max(M) = 2
        assert!((joint_unit_hessian_max_eigenvalue(&m) - 5.0).abs() < 1e-10);
    }

    #[test]
    fn local_cost_examples() {
        let inst = scalar_instance(3, &[(0, 1)], &[vec![1.0], vec![2.0], vec![3.0]], &[0.0; 3], 1.0, 1.0);
        let tr = inst.empty_trajectory();
        // isolated agent 2
        assert_eq!(local_cost(&inst, &tr, 2, 1, &[]).unwrap(), 9.0);
        assert_eq!(local_cost(&inst, &tr, 0, 1, &[0.0]).unwrap(), 1.0);
        assert!(local_cost(&inst, &tr, 0, 1, &[]).is_err());
        assert!(local_cost(&inst, &tr, 0, 1, &[1.5]).is_err());
        assert!(local_cost(&inst, &tr, 0, 2, &[0.5]).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let vals = [0.3, -1.2, 0.8, 2.1, -0.4, 1.7, -2.5, 0.05, 1.1];
        let inst = random_instance(3, &[(0, 1), (1, 2)], 3, 2, &vals);
        let tr = filled(&inst, &vals);
        let g = global_gradient(&inst, &tr).unwrap();
        let z = tr.decision_vector();
        let h = 1e-5;
        for i in 0..z.len() {
            let mut plus = inst.empty_trajectory();
            let mut minus = inst.empty_trajectory();
            let mut zp = z.clone();
            zp[i] += h;
            plus.set_decision_vector(&zp).unwrap();
            zp[i] -= 2.0 * h;
            minus.set_decision_vector(&zp).unwrap();
            let fd = (global_cost(&inst, &plus).unwrap() - global_cost(&inst, &minus).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-6 * (1.0 + g[i].abs()), "coordinate {i}: {fd} vs {}", g[i]);
        }
    }

    proptest! {
        #[test]
        fn smoothness_upper_bounds(
            x in prop::collection::vec(-5.0f64..5.0, 4),
            y in prop::collection::vec(-5.0f64..5.0, 4),
            p in prop::collection::vec(-3.0f64..3.0, 2),
            m in prop::collection::vec(-2.0f64..2.0, 4),
            w in 0.0f64..3.0,
        ) {
            let (z, zz) = (&x[..], &y[..]);
            let upper = |f: f64, fz: f64, grad: &[f64], l: f64| {
                let lin: f64 = grad.iter().zip(zz.iter().zip(z)).map(|(g, (b, a))| g * (b - a)).sum();
                prop_assert!(f <= fz + lin + 0.5 * l * dist_sq(z, zz) + 1e-9 * (1.0 + f.abs()));
                Ok(())
            };
            let node = NodeCost::new(p.clone(), w);
            upper(node.eval(&zz[..2]), node.eval(&z[..2]), &node.gradient(&z[..2]), node.smoothness())?;
            // pad the node gradient to the joint dimension is not needed: compare on first two coords only
            let c = TemporalCost::new(SquareMatrix { dim: 2, data: m.clone() }, w);
            let (gx, gp) = c.gradient(&z[..2], &z[2..]);
            let g: Vec<f64> = gx.into_iter().chain(gp).collect();
            upper(c.eval(&zz[..2], &zz[2..]), c.eval(&z[..2], &z[2..]), &g, c.smoothness())?;
            let s = SpatialCost::new(p.clone(), w);
            let (ga, gb) = s.gradient(&z[..2], &z[2..]);
            let g: Vec<f64> = ga.into_iter().chain(gb).collect();
            upper(s.eval(&zz[..2], &zz[2..]), s.eval(&z[..2], &z[2..]), &g, s.smoothness())?;
        }

        #[test]
        fn costs_are_non_negative(vals in prop::collection::vec(-4.0f64..4.0, 5..20)) {
            let inst = random_instance(3, &[(0, 1), (0, 2), (1, 2)], 2, 1, &vals);
            let tr = filled(&inst, &vals);
            prop_assert!(global_cost(&inst, &tr).unwrap() >= 0.0);
        }

        #[test]
        fn decomposition_identity(vals in prop::collection::vec(-4.0f64..4.0, 5..20), kappas in prop::collection::vec(0.0f64..1.0, 3)) {
            let inst = random_instance(3, &[(0, 1), (1, 2), (0, 2)], 2, 2, &vals);
            let tr = filled(&inst, &vals);
            for t in 1..=2 {
                let total: f64 = (0..3)
                    .map(|v| {
                        let w: Vec<f64> = inst
                            .network
                            .incident(v)
                            .iter()
                            .map(|inc| {
                                let k = kappas[inc.edge];
                                if inst.network.edges()[inc.edge].a == v { k } else { 1.0 - k }
                            })
                            .collect();
                        local_cost(&inst, &tr, v, t, &w).unwrap()
                    })
                    .sum();
                let direct = step_cost(&inst, &tr, t);
                prop_assert!((total - direct).abs() <= 1e-12 * (1.0 + direct));
            }
        }
    }
}
