//! Transient Fickian moisture transport, backward Euler in time.
//!
//! The semi-discrete form is `M dC/dt + K C = f` with the consistent mass
//! `M = int N N` and `K = int D grad N . grad N`, which conserves moisture
//! for spatially varying `D`.

use serde::{Deserialize, Serialize};

use crate::element::edge_shape;
use crate::element::gauss_1d;
use crate::error::{Error, Result};
use crate::fe::FeSpace;
use crate::sparse::{constraint_mask, ConstrainedSolver, CsrMatrix, SolverKind, SparseLinearSystem};

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationField {
    /// Nodal mass fraction.
    pub values: Vec<f64>,
    pub time: f64,
}

impl ConcentrationField {
    pub fn uniform(n: usize, value: f64) -> Self {
        Self {
            values: vec![value; n],
            time: 0.0,
        }
    }
}

/// Prescribed concentration on a node set over `(start, end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoistureDirichlet {
    pub set: String,
    pub value: f64,
    #[serde(default)]
    pub start: f64,
    #[serde(default = "forever")]
    pub end: f64,
}

/// Inward flux per unit boundary length over `(start, end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoistureFlux {
    pub set: String,
    pub q: f64,
    #[serde(default)]
    pub start: f64,
    #[serde(default = "forever")]
    pub end: f64,
}

fn forever() -> f64 {
    f64::INFINITY
}

fn active(start: f64, end: f64, t: f64) -> bool {
    let eps = 1e-9 * t.abs().max(1.0);
    t > start + eps && t <= end + eps
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MoistureBc {
    pub dirichlet: Vec<MoistureDirichlet>,
    pub flux: Vec<MoistureFlux>,
}

impl MoistureBc {
    /// Constrained nodes and values at time `t`, sorted by node.
    pub fn constraints(&self, space: &FeSpace, t: f64) -> Result<Vec<(usize, f64)>> {
        let mut out = Vec::new();
        for d in self.dirichlet.iter().filter(|d| active(d.start, d.end, t)) {
            for &n in space.mesh.node_set(&d.set)? {
                out.push((n, d.value));
            }
        }
        // rejects conflicting values on shared corner nodes
        let mask = constraint_mask(space.num_nodes(), &out)?;
        Ok(mask
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i, v)))
            .collect())
    }

    /// Consistent nodal load of the active flux entries at time `t`.
    pub fn flux_load(&self, space: &FeSpace, t: f64) -> Result<Vec<f64>> {
        let mut f = vec![0.0; space.num_nodes()];
        for entry in self.flux.iter().filter(|d| active(d.start, d.end, t)) {
            for edge in space.mesh.boundary_edges(&entry.set)? {
                let (a, b) = (space.mesh.coords[edge[0]], space.mesh.coords[*edge.last().unwrap()]);
                let half = 0.5 * ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                for (s, w) in gauss_1d(3) {
                    let (n, _) = edge_shape(edge.len(), s);
                    for (k, &node) in edge.iter().enumerate() {
                        f[node] += entry.q * n[k] * w * half;
                    }
                }
            }
        }
        Ok(f)
    }
}

/// `(M, K)` for the given quadrature-point diffusivity.
pub fn assemble_matrices(space: &FeSpace, diffusivity: &[f64]) -> Result<(CsrMatrix, CsrMatrix)> {
    let mut m = space.scalar_matrix();
    let mut k = space.scalar_matrix();
    let nq = space.nqp();
    for e in 0..space.num_elements() {
        let conn = space.mesh.element(e);
        for (q, qp) in space.qps(e).iter().enumerate() {
            let d = diffusivity[e * nq + q];
            if !(d > 0.0) {
                return Err(Error::Parameter(format!("diffusivity {d} at element {e} is not positive")));
            }
            for (a, &na) in conn.iter().enumerate() {
                for (b, &nb) in conn.iter().enumerate() {
                    m.add(na, nb, qp.n[a] * qp.n[b] * qp.weight);
                    let g = qp.grad[a][0] * qp.grad[b][0] + qp.grad[a][1] * qp.grad[b][1];
                    k.add(na, nb, d * g * qp.weight);
                }
            }
        }
    }
    Ok((m, k))
}

/// Backward-Euler system `(M/dt + K) C = M/dt C_old` (no boundary terms).
pub fn assemble_diffusion(
    space: &FeSpace,
    diffusivity: &[f64],
    c_old: &ConcentrationField,
    dt: f64,
) -> Result<SparseLinearSystem> {
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
    }
    let (m, k) = assemble_matrices(space, diffusivity)?;
    let a = combine(&m, &k, dt);
    let mut rhs = m.mul_vec(&c_old.values);
    rhs.iter_mut().for_each(|v| *v /= dt);
    Ok(SparseLinearSystem::new(a, rhs))
}

/// Backward-Euler residual `int N (C - C_old)/dt + D grad N . grad C`
/// evaluated point by point, without the assembled matrices.
pub fn diffusion_residual(space: &FeSpace, diffusivity: &[f64], c: &[f64], c_old: &[f64], dt: f64) -> Vec<f64> {
    let mut r = vec![0.0; space.num_nodes()];
    let nq = space.nqp();
    for e in 0..space.num_elements() {
        let conn = space.mesh.element(e);
        for (q, qp) in space.qps(e).iter().enumerate() {
            let (mut rate, mut g) = (0.0, [0.0; 2]);
            for (a, &n) in conn.iter().enumerate() {
                rate += qp.n[a] * (c[n] - c_old[n]) / dt;
                g[0] += qp.grad[a][0] * c[n];
                g[1] += qp.grad[a][1] * c[n];
            }
            let d = diffusivity[e * nq + q];
            for (a, &n) in conn.iter().enumerate() {
                r[n] += qp.weight * (qp.n[a] * rate + d * (qp.grad[a][0] * g[0] + qp.grad[a][1] * g[1]));
            }
        }
    }
    r
}

fn combine(m: &CsrMatrix, k: &CsrMatrix, dt: f64) -> CsrMatrix {
    let n = m.dim();
    let mut a = m.clone();
    a.set_zero();
    for i in 0..n {
        let (cols, mv) = m.row(i);
        let (_, kv) = k.row(i);
        for (idx, &j) in cols.iter().enumerate() {
            a.add(i, j, mv[idx] / dt + kv[idx]);
        }
    }
    a
}

/// Diffusion stepper with the factorisation cached per time step size and
/// constrained node set.
#[derive(Debug, Clone)]
pub struct DiffusionSolver {
    mass: CsrMatrix,
    stiffness: CsrMatrix,
    kind: SolverKind,
    cache: Option<(u64, Vec<usize>, ConstrainedSolver)>,
}

impl DiffusionSolver {
    pub fn new(space: &FeSpace, diffusivity: &[f64], kind: SolverKind) -> Result<Self> {
        let (mass, stiffness) = assemble_matrices(space, diffusivity)?;
        Ok(Self {
            mass,
            stiffness,
            kind,
            cache: None,
        })
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    /// Advance `state` by `dt` with the boundary data active at `t + dt`.
    pub fn step(
        &mut self,
        space: &FeSpace,
        state: &ConcentrationField,
        bc: &MoistureBc,
        dt: f64,
    ) -> Result<ConcentrationField> {
        if !(dt > 0.0) {
            return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
        }
        let t = state.time + dt;
        let constraints = bc.constraints(space, t)?;
        let fixed: Vec<usize> = constraints.iter().map(|c| c.0).collect();
        let key = dt.to_bits();
        let stale = !matches!(&self.cache, Some((k, f, _)) if *k == key && *f == fixed);
        if stale {
            let a = combine(&self.mass, &self.stiffness, dt);
            let solver = ConstrainedSolver::new(a, &fixed, self.kind)?;
            self.cache = Some((key, fixed, solver));
        }
        let solver = &self.cache.as_ref().unwrap().2;
        let mut rhs = self.mass.mul_vec(&state.values);
        let flux = bc.flux_load(space, t)?;
        for (r, f) in rhs.iter_mut().zip(&flux) {
            *r = *r / dt + f;
        }
        let mut values = vec![0.0; rhs.len()];
        for &(i, v) in &constraints {
            values[i] = v;
        }
        let values = solver.solve_checked(&rhs, &values)?;
        Ok(ConcentrationField { values, time: t })
    }
}

/// `int C dV`
pub fn total_moisture(state: &ConcentrationField, space: &FeSpace) -> f64 {
    space.integrate(&state.values)
}

/// Convenience: one step without a cached solver.
pub fn step_diffusion(
    space: &FeSpace,
    diffusivity: &[f64],
    state: &ConcentrationField,
    bc: &MoistureBc,
    dt: f64,
) -> Result<ConcentrationField> {
    DiffusionSolver::new(space, diffusivity, SolverKind::Auto)?.step(space, state, bc, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::ElementOrder;
    use crate::mesh::{build_rect_mesh, Domain2D, LEFT, RIGHT};
    use crate::oracles::slab_diffusion_oracle;
    use rand::{Rng, SeedableRng};

    fn strip(len: f64, h: f64, order: ElementOrder) -> FeSpace {
        let d = Domain2D::new(len, h).unwrap();
        FeSpace::new(build_rect_mesh(&d, h, order).unwrap()).unwrap()
    }

    fn wet_left(value: f64) -> MoistureBc {
        MoistureBc {
            dirichlet: vec![MoistureDirichlet {
                set: LEFT.into(),
                value,
                start: 0.0,
                end: f64::INFINITY,
            }],
            flux: vec![],
        }
    }

    #[test]
    fn uniform_state_is_stationary() {
        let s = strip(1.0, 1.0, ElementOrder::Bilinear);
        let d = vec![1e-3; s.num_qp()];
        let c = ConcentrationField::uniform(s.num_nodes(), 0.3);
        for dt in [1e-3, 1.0, 1e6] {
            let next = step_diffusion(&s, &d, &c, &MoistureBc::default(), dt).unwrap();
            assert!(next.values.iter().all(|v| (v - 0.3).abs() < 1e-12));
        }
    }

    #[test]
    fn both_ends_fixed_converge_to_value() {
        let s = strip(1.0, 0.1, ElementOrder::Bilinear);
        let d = vec![1.0; s.num_qp()];
        let mut bc = wet_left(0.5);
        bc.dirichlet.push(MoistureDirichlet {
            set: RIGHT.into(),
            value: 0.5,
            start: 0.0,
            end: f64::INFINITY,
        });
        let mut solver = DiffusionSolver::new(&s, &d, SolverKind::Direct).unwrap();
        let mut c = ConcentrationField::uniform(s.num_nodes(), 0.0);
        for _ in 0..50 {
            c = solver.step(&s, &c, &bc, 1.0).unwrap();
        }
        assert!(c.values.iter().all(|v| (v - 0.5).abs() < 1e-10));
    }

    #[test]
    fn conflicting_corner_values_rejected() {
        let s = strip(1.0, 0.1, ElementOrder::Bilinear);
        let mut bc = wet_left(0.5);
        bc.dirichlet.push(MoistureDirichlet {
            set: crate::mesh::BOTTOM.into(),
            value: 0.2,
            start: 0.0,
            end: f64::INFINITY,
        });
        assert!(matches!(bc.constraints(&s, 1.0), Err(Error::ConflictingConstraint { .. })));
    }

    #[test]
    fn zero_flux_conserves_moisture() {
        let d = Domain2D::new(0.02, 0.02).unwrap();
        let s = FeSpace::new(build_rect_mesh(&d, 0.001, ElementOrder::Serendipity8).unwrap()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let dq: Vec<f64> = (0..s.num_qp()).map(|_| rng.gen_range(0.8e-6..1.5e-6)).collect();
        let mut c = ConcentrationField {
            values: (0..s.num_nodes()).map(|_| rng.gen_range(0.0..0.1)).collect(),
            time: 0.0,
        };
        let m0 = total_moisture(&c, &s);
        let mut solver = DiffusionSolver::new(&s, &dq, SolverKind::Direct).unwrap();
        for _ in 0..20 {
            let next = solver.step(&s, &c, &MoistureBc::default(), 10.0).unwrap();
            let drift = (total_moisture(&next, &s) - total_moisture(&c, &s)).abs() / m0;
            assert!(drift < 1e-10, "{drift}");
            c = next;
        }
    }

    #[test]
    fn total_moisture_of_uniform_field() {
        let s = strip(0.3, 0.1, ElementOrder::Bilinear);
        assert_eq!(total_moisture(&ConcentrationField::uniform(s.num_nodes(), 0.0), &s), 0.0);
        let v = total_moisture(&ConcentrationField::uniform(s.num_nodes(), 0.07), &s);
        assert!((v - 0.07 * 0.03).abs() < 1e-15);
    }

    #[test]
    fn flux_load_integrates_to_flux_times_length() {
        for order in [ElementOrder::Bilinear, ElementOrder::Serendipity8] {
            let s = strip(0.3, 0.1, order);
            let bc = MoistureBc {
                dirichlet: vec![],
                flux: vec![MoistureFlux {
                    set: crate::mesh::TOP.into(),
                    q: 2.0,
                    start: 0.0,
                    end: 1.0,
                }],
            };
            let f = bc.flux_load(&s, 0.5).unwrap();
            assert!((f.iter().sum::<f64>() - 0.6).abs() < 1e-14);
            assert!(bc.flux_load(&s, 2.0).unwrap().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn slab_uptake_against_series() {
        // epoxy slab of length 1, Fourier number 0.2 at the end
        let (len, dcoef, cs) = (1.0, 1.45e-6, 0.0745);
        let s = strip(len, 0.01, ElementOrder::Bilinear);
        let dq = vec![dcoef; s.num_qp()];
        let t_end = 0.2 * len * len / dcoef;
        let steps = 400;
        let dt = t_end / steps as f64;
        let mut solver = DiffusionSolver::new(&s, &dq, SolverKind::Direct).unwrap();
        let mut c = ConcentrationField::uniform(s.num_nodes(), 0.0);
        let bc = wet_left(cs);
        let mut centre = Vec::new();
        let mid = s.mesh.nearest_node([0.5, 0.0]);
        for _ in 0..steps {
            c = solver.step(&s, &c, &bc, dt).unwrap();
            centre.push(c.values[mid]);
        }
        assert!(centre.windows(2).all(|w| w[1] >= w[0] - 1e-15));
        let (mut num, mut den) = (0.0, 0.0);
        for (p, v) in s.mesh.coords.iter().zip(&c.values) {
            let exact = slab_diffusion_oracle(p[0], t_end, dcoef, cs, len);
            num += (v - exact).powi(2);
            den += exact * exact;
        }
        let err = (num / den).sqrt();
        assert!(err < 0.01, "relative L2 error {err}");
    }
}
