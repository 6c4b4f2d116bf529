//! Displacement and phase-field sub-problems.
//!
//! The displacement residual is `r = int g(phi) B^T C (B u - eps_m) dV` with
//! `g = (1 - phi)^2 + kappa`; its stiffness is exact for fixed `phi` and `C`.
//! The phase-field problem with a frozen history field is linear:
//! `sum_i w_i [(2H + Gc/l) phi_i - 2H] + Gc l int grad N . grad phi = 0`,
//! with the reaction terms lumped and `H`, `Gc` taken as element means.

use crate::constitutive::{degradation, hygroscopic_strain, Sym2};
use crate::element::{QuadPoint, MAX_NODES};
use crate::error::{Error, Result};
use crate::fe::FeSpace;
use crate::indicator::PropertyFields;
use crate::sparse::{ConstrainedSolver, CsrMatrix, SolverKind, SparseLinearSystem};

/// Fields the displacement problem depends on besides `u`.
#[derive(Debug, Clone, Copy)]
pub struct MechanicsInput<'a> {
    /// Nodal damage.
    pub phi: &'a [f64],
    /// Nodal concentration.
    pub conc: &'a [f64],
    pub c0: f64,
    pub kappa: f64,
}

/// Small-strain tensor at a quadrature point from interleaved nodal `u`.
pub fn strain_at(qp: &QuadPoint, conn: &[usize], u: &[f64]) -> Sym2 {
    let mut e = Sym2::ZERO;
    for (a, &n) in conn.iter().enumerate() {
        let (ux, uy) = (u[2 * n], u[2 * n + 1]);
        let [gx, gy] = qp.grad[a];
        e.xx += gx * ux;
        e.yy += gy * uy;
        e.xy += 0.5 * (gy * ux + gx * uy);
    }
    e
}

fn eigenstrain(space: &FeSpace, props: &PropertyFields, e: usize, q: usize, input: &MechanicsInput) -> Sym2 {
    let c = space.at_qp(e, q, input.conc);
    hygroscopic_strain(c, input.c0, &props.hygro[e * space.nqp() + q], props.orientation[e])
}

/// Stiffness `K` and hygroscopic load `f` with `r(u) = K u - f`.
pub fn assemble_displacement_parts(
    space: &FeSpace,
    props: &PropertyFields,
    input: &MechanicsInput,
) -> (CsrMatrix, Vec<f64>) {
    let mut k = space.vector_matrix();
    let mut f = vec![0.0; 2 * space.num_nodes()];
    let nn = space.mesh.nodes_per_element();
    let mut ke = [[0.0; 2 * MAX_NODES]; 2 * MAX_NODES];
    for e in 0..space.num_elements() {
        let conn = space.mesh.element(e);
        let c = &props.laws[e].c;
        for row in ke.iter_mut().take(2 * nn) {
            row[..2 * nn].iter_mut().for_each(|v| *v = 0.0);
        }
        for (q, qp) in space.qps(e).iter().enumerate() {
            let g = degradation(space.at_qp(e, q, input.phi), input.kappa) * qp.weight;
            // columns of B: dof (a, x) -> [gx, 0, gy]; (a, y) -> [0, gy, gx]
            let mut cb = [[0.0; 3]; 2 * MAX_NODES];
            for a in 0..nn {
                let [gx, gy] = qp.grad[a];
                for i in 0..3 {
                    cb[2 * a][i] = c[i][0] * gx + c[i][2] * gy;
                    cb[2 * a + 1][i] = c[i][1] * gy + c[i][2] * gx;
                }
            }
            for a in 0..nn {
                let [gx, gy] = qp.grad[a];
                for j in 0..2 * nn {
                    ke[2 * a][j] += g * (gx * cb[j][0] + gy * cb[j][2]);
                    ke[2 * a + 1][j] += g * (gy * cb[j][1] + gx * cb[j][2]);
                }
            }
            let em = eigenstrain(space, props, e, q, input);
            if em != Sym2::ZERO {
                let s = props.laws[e].stress(em);
                for (a, &n) in conn.iter().enumerate() {
                    let [gx, gy] = qp.grad[a];
                    f[2 * n] += g * (gx * s.xx + gy * s.xy);
                    f[2 * n + 1] += g * (gy * s.yy + gx * s.xy);
                }
            }
        }
        for a in 0..nn {
            for da in 0..2 {
                let i = 2 * conn[a] + da;
                for b in 0..nn {
                    for db in 0..2 {
                        k.add(i, 2 * conn[b] + db, ke[2 * a + da][2 * b + db]);
                    }
                }
            }
        }
    }
    (k, f)
}

/// `r(u) = int g B^T sigma_0 dV`
pub fn displacement_residual(space: &FeSpace, props: &PropertyFields, input: &MechanicsInput, u: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; 2 * space.num_nodes()];
    for e in 0..space.num_elements() {
        let conn = space.mesh.element(e);
        for (q, qp) in space.qps(e).iter().enumerate() {
            let g = degradation(space.at_qp(e, q, input.phi), input.kappa) * qp.weight;
            let eps = strain_at(qp, conn, u).sub(eigenstrain(space, props, e, q, input));
            let s = props.laws[e].stress(eps);
            for (a, &n) in conn.iter().enumerate() {
                let [gx, gy] = qp.grad[a];
                r[2 * n] += g * (gx * s.xx + gy * s.xy);
                r[2 * n + 1] += g * (gy * s.yy + gx * s.xy);
            }
        }
    }
    r
}

/// Newton system at `u`: stiffness and `-r(u)`.
pub fn assemble_displacement(
    space: &FeSpace,
    props: &PropertyFields,
    input: &MechanicsInput,
    u: &[f64],
) -> SparseLinearSystem {
    let (k, f) = assemble_displacement_parts(space, props, input);
    let ku = k.mul_vec(u);
    let rhs = f.iter().zip(&ku).map(|(f, ku)| f - ku).collect();
    SparseLinearSystem::new(k, rhs)
}

#[derive(Debug, Clone)]
pub struct DisplacementSolution {
    pub u: Vec<f64>,
    /// `r(u)`: nodal internal forces, nonzero only at supports.
    pub internal: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

pub const NEWTON_TOL: f64 = 1e-8;
const NEWTON_MAX: usize = 8;

/// Solve for `u` with the prescribed `constraints` `(dof, value)`.
pub fn solve_displacement(
    space: &FeSpace,
    props: &PropertyFields,
    input: &MechanicsInput,
    u0: &[f64],
    constraints: &[(usize, f64)],
    kind: SolverKind,
) -> Result<DisplacementSolution> {
    let (k, f) = assemble_displacement_parts(space, props, input);
    let fixed: Vec<usize> = constraints.iter().map(|c| c.0).collect();
    let solver = ConstrainedSolver::new(k, &fixed, kind)?;
    let mut u = u0.to_vec();
    let mut is_fixed = vec![false; u.len()];
    for &(d, v) in constraints {
        u[d] = v;
        is_fixed[d] = true;
    }
    let mut zero = vec![0.0; u.len()];
    let mut residual = f64::INFINITY;
    for it in 1..=NEWTON_MAX {
        let ku = solver.matrix().mul_vec(&u);
        let r: Vec<f64> = ku.iter().zip(&f).map(|(a, b)| a - b).collect();
        let free_norm = r
            .iter()
            .zip(&is_fixed)
            .filter(|(_, &fx)| !fx)
            .map(|(v, _)| v * v)
            .sum::<f64>()
            .sqrt();
        let scale = r.iter().map(|v| v * v).sum::<f64>().sqrt().max(norm(&f)).max(norm(&ku));
        residual = if scale > 0.0 { free_norm / scale } else { 0.0 };
        if residual <= NEWTON_TOL {
            return Ok(DisplacementSolution {
                u,
                internal: r,
                iterations: it - 1,
                residual,
            });
        }
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        zero.iter_mut().for_each(|v| *v = 0.0);
        let du = solver.solve_checked(&rhs, &zero)?;
        for (ui, di) in u.iter_mut().zip(&du) {
            *ui += di;
        }
    }
    Err(Error::NewtonNoConvergence {
        iterations: NEWTON_MAX,
        residual,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Sum of the internal force component over a node set: the force the
/// supports exert on the body (N per mm thickness).
pub fn reaction_force(internal: &[f64], nodes: &[usize], component: usize) -> f64 {
    nodes.iter().map(|&n| internal[2 * n + component]).sum()
}

/// Tensile energy density at every quadrature point.
pub fn tensile_energy(space: &FeSpace, props: &PropertyFields, input: &MechanicsInput, u: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(space.num_qp());
    for e in 0..space.num_elements() {
        let conn = space.mesh.element(e);
        for (q, qp) in space.qps(e).iter().enumerate() {
            let eps = strain_at(qp, conn, u).sub(eigenstrain(space, props, e, q, input));
            out.push(props.laws[e].split_energy(eps).0);
        }
    }
    out
}

/// Degraded stress at every quadrature point.
pub fn stresses(space: &FeSpace, props: &PropertyFields, input: &MechanicsInput, u: &[f64]) -> Vec<Sym2> {
    let mut out = Vec::with_capacity(space.num_qp());
    for e in 0..space.num_elements() {
        let conn = space.mesh.element(e);
        for (q, qp) in space.qps(e).iter().enumerate() {
            let eps = strain_at(qp, conn, u).sub(eigenstrain(space, props, e, q, input));
            let g = degradation(space.at_qp(e, q, input.phi), input.kappa);
            out.push(props.laws[e].stress(eps).scale(g));
        }
    }
    out
}

/// Phase-field operator and right-hand side for a frozen history field.
pub fn assemble_phase_field(space: &FeSpace, history: &[f64], gc: &[f64], length_scale: f64) -> SparseLinearSystem {
    let mut k = space.scalar_matrix();
    let mut rhs = vec![0.0; space.num_nodes()];
    for e in 0..space.num_elements() {
        let conn = space.mesh.element(e);
        let h = space.element_mean(e, history);
        let g = space.element_mean(e, gc);
        for (a, &w) in space.lumped(e).iter().enumerate() {
            k.add(conn[a], conn[a], w * (2.0 * h + g / length_scale));
            rhs[conn[a]] += w * 2.0 * h;
        }
        for qp in space.qps(e) {
            for (a, &na) in conn.iter().enumerate() {
                for (b, &nb) in conn.iter().enumerate() {
                    let d = qp.grad[a][0] * qp.grad[b][0] + qp.grad[a][1] * qp.grad[b][1];
                    k.add(na, nb, g * length_scale * d * qp.weight);
                }
            }
        }
    }
    SparseLinearSystem::new(k, rhs)
}

pub fn phase_field_residual(system: &SparseLinearSystem, phi: &[f64]) -> Vec<f64> {
    let kp = system.matrix.mul_vec(phi);
    kp.iter().zip(&system.rhs).map(|(a, b)| a - b).collect()
}

pub fn solve_phase_field(
    space: &FeSpace,
    history: &[f64],
    gc: &[f64],
    length_scale: f64,
    kind: SolverKind,
) -> Result<Vec<f64>> {
    let system = assemble_phase_field(space, history, gc, length_scale);
    if system.rhs.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; space.num_nodes()]);
    }
    let solver = ConstrainedSolver::new(system.matrix, &[], kind)?;
    solver.solve_checked(&system.rhs, &vec![0.0; system.rhs.len()])
}

/// Crack surface functional `int (phi^2 / (2 l) + l |grad phi|^2 / 2) dV`.
pub fn crack_length(space: &FeSpace, phi: &[f64], length_scale: f64) -> f64 {
    let mut total = 0.0;
    for e in 0..space.num_elements() {
        let conn = space.mesh.element(e);
        for qp in space.qps(e) {
            let mut p = 0.0;
            let mut g = [0.0; 2];
            for (a, &n) in conn.iter().enumerate() {
                p += qp.n[a] * phi[n];
                g[0] += qp.grad[a][0] * phi[n];
                g[1] += qp.grad[a][1] * phi[n];
            }
            total += qp.weight * (p * p / (2.0 * length_scale) + 0.5 * length_scale * (g[0] * g[0] + g[1] * g[1]));
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::ElementOrder;
    use crate::fibres::FibreLayout;
    use crate::indicator::{build_property_fields, IndicatorField};
    use crate::materials::MaterialCatalog;
    use crate::mesh::{build_rect_mesh, Domain2D, BOTTOM, LEFT, TOP};
    use crate::oracles::{at2_homogeneous_oracle, fd_jacobian_check};
    use rand::{Rng, SeedableRng};

    fn setup(w: f64, h: f64, size: f64, order: ElementOrder) -> (FeSpace, PropertyFields) {
        let d = Domain2D::new(w, h).unwrap();
        let s = FeSpace::new(build_rect_mesh(&d, size, order).unwrap()).unwrap();
        let ind = IndicatorField {
            values: vec![0.0; s.num_nodes()],
            length_scale: 1.0,
        };
        let p = build_property_fields(&ind, &s, &MaterialCatalog::flax_epoxy(), &FibreLayout::empty(), 2.0).unwrap();
        (s, p)
    }

    fn dofs(space: &FeSpace, set: &str, comp: usize, value: f64) -> Vec<(usize, f64)> {
        space.mesh.node_set(set).unwrap().iter().map(|&n| (2 * n + comp, value)).collect()
    }

    #[test]
    fn unloaded_body_has_zero_residual() {
        let (s, p) = setup(1.0, 1.0, 0.5, ElementOrder::Bilinear);
        let z = vec![0.0; s.num_nodes()];
        let input = MechanicsInput { phi: &z, conc: &z, c0: 0.0, kappa: 1e-7 };
        let r = displacement_residual(&s, &p, &input, &vec![0.0; 2 * s.num_nodes()]);
        assert!(r.iter().all(|&v| v == 0.0));
        let mut bc = dofs(&s, BOTTOM, 0, 0.0);
        bc.extend(dofs(&s, BOTTOM, 1, 0.0));
        let sol = solve_displacement(&s, &p, &input, &vec![0.0; 2 * s.num_nodes()], &bc, SolverKind::Direct).unwrap();
        assert!(sol.u.iter().all(|&v| v == 0.0));
        assert_eq!(reaction_force(&sol.internal, s.mesh.node_set(BOTTOM).unwrap(), 1), 0.0);
    }

    #[test]
    fn patch_test_and_uniform_tension_reaction() {
        for order in [ElementOrder::Bilinear, ElementOrder::Serendipity8] {
            let (s, p) = setup(0.3, 0.2, 0.05, order);
            let z = vec![0.0; s.num_nodes()];
            let input = MechanicsInput { phi: &z, conc: &z, c0: 0.0, kappa: 0.0 };
            // u = (a x + b y, c x + d y) prescribed on the boundary only
            let (a, b, c, d) = (1e-3, 2e-4, -3e-4, 5e-4);
            let mut bc = Vec::new();
            for set in [LEFT, crate::mesh::RIGHT, TOP, BOTTOM] {
                for &n in s.mesh.node_set(set).unwrap() {
                    let [x, y] = s.mesh.coords[n];
                    bc.push((2 * n, a * x + b * y));
                    bc.push((2 * n + 1, c * x + d * y));
                }
            }
            let sol = solve_displacement(&s, &p, &input, &vec![0.0; 2 * s.num_nodes()], &bc, SolverKind::Direct).unwrap();
            for (n, xy) in s.mesh.coords.iter().enumerate() {
                assert!((sol.u[2 * n] - (a * xy[0] + b * xy[1])).abs() < 1e-10 * 1e-3);
                assert!((sol.u[2 * n + 1] - (c * xy[0] + d * xy[1])).abs() < 1e-10 * 1e-3);
            }
            let st = stresses(&s, &p, &input, &sol.u);
            let exact = p.laws[0].stress(Sym2::new(a, d, 0.5 * (b + c)));
            for sg in &st {
                assert!(sg.sub(exact).max_abs() < 1e-10 * exact.max_abs());
            }
            // uniform stress: the side-edge shear shares of the two top
            // corners cancel, leaving sigma_yy * W
            let f = reaction_force(&sol.internal, s.mesh.node_set(TOP).unwrap(), 1);
            assert!((f - exact.yy * 0.3).abs() < 1e-9 * exact.yy.abs(), "{order:?} {f}");
        }
    }

    #[test]
    fn free_swelling_is_stress_free() {
        let (s, p) = setup(1.0, 1.0, 0.1, ElementOrder::Bilinear);
        let z = vec![0.0; s.num_nodes()];
        let c = vec![0.0745; s.num_nodes()];
        let input = MechanicsInput { phi: &z, conc: &c, c0: 0.0, kappa: 1e-7 };
        // rigid-body constraints only
        let n0 = s.mesh.nearest_node([0.0, 0.0]);
        let n1 = s.mesh.nearest_node([1.0, 0.0]);
        let bc = vec![(2 * n0, 0.0), (2 * n0 + 1, 0.0), (2 * n1 + 1, 0.0)];
        let sol = solve_displacement(&s, &p, &input, &vec![0.0; 2 * s.num_nodes()], &bc, SolverKind::Direct).unwrap();
        let st = stresses(&s, &p, &input, &sol.u);
        assert!(st.iter().all(|x| x.max_abs() < 1e-6 * 3600.0));
        assert!((sol.u[2 * n1] - 0.0447).abs() < 1e-6);
    }

    #[test]
    fn displacement_jacobian_matches_differences() {
        let (s, p) = setup(1.0, 1.0, 1.0, ElementOrder::Bilinear);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let phi: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
            let conc: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..0.1)).collect();
            let u: Vec<f64> = (0..8).map(|_| rng.gen_range(-0.01..0.01)).collect();
            let input = MechanicsInput { phi: &phi, conc: &conc, c0: 0.0, kappa: 1e-7 };
            let sys = assemble_displacement(&s, &p, &input, &u);
            let err = fd_jacobian_check(|x| displacement_residual(&s, &p, &input, x), &sys.matrix.to_dense(), &u, 1e-6);
            assert!(err < 1e-6, "{err}");
            let r = displacement_residual(&s, &p, &input, &u);
            assert!(r.iter().zip(&sys.rhs).all(|(a, b)| (a + b).abs() < 1e-9));
        }
    }

    #[test]
    fn homogeneous_damage_matches_closed_form() {
        let (s, _) = setup(0.02, 0.02, 0.001, ElementOrder::Bilinear);
        let (gc, ell) = (1.2, 0.001);
        for h in [0.0, gc / (4.0 * ell), gc / (2.0 * ell), 2.0 * gc / ell] {
            let hist = vec![h; s.num_qp()];
            let g = vec![gc; s.num_qp()];
            let phi = solve_phase_field(&s, &hist, &g, ell, SolverKind::Direct).unwrap();
            let exact = at2_homogeneous_oracle(h, gc, ell);
            assert!(phi.iter().all(|v| (v - exact).abs() < 1e-6));
        }
    }

    #[test]
    fn phase_field_jacobian_and_bounds() {
        let (s, _) = setup(0.004, 0.004, 0.001, ElementOrder::Bilinear);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let hist: Vec<f64> = (0..s.num_qp()).map(|_| rng.gen_range(0.0..2000.0)).collect();
        let gc: Vec<f64> = (0..s.num_qp()).map(|_| rng.gen_range(0.2..2.1)).collect();
        let sys = assemble_phase_field(&s, &hist, &gc, 0.001);
        let phi0: Vec<f64> = (0..s.num_nodes()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let err = fd_jacobian_check(|x| phase_field_residual(&sys, x), &sys.matrix.to_dense(), &phi0, 1e-6);
        assert!(err < 1e-6);
        let phi = solve_phase_field(&s, &hist, &gc, 0.001, SolverKind::Direct).unwrap();
        assert!(phi.iter().all(|&v| (0.0..1.0).contains(&v)));
        // larger history everywhere gives pointwise larger damage
        let more: Vec<f64> = hist.iter().map(|h| h + rng.gen_range(0.0..500.0)).collect();
        let phi2 = solve_phase_field(&s, &more, &gc, 0.001, SolverKind::Direct).unwrap();
        assert!(phi.iter().zip(&phi2).all(|(a, b)| b >= a));
    }

    #[test]
    fn crack_band_has_unit_length() {
        // fully broken line x = 0.5 across a unit-height strip
        let ell = 0.02;
        let (s, _) = setup(1.0, 0.02, ell / 5.0, ElementOrder::Bilinear);
        let mid: Vec<usize> = (0..s.num_nodes()).filter(|&n| (s.mesh.coords[n][0] - 0.5).abs() < 1e-12).collect();
        let ind = crate::indicator::solve_indicator(&s, &mid, ell, SolverKind::Direct).unwrap();
        let gamma = crack_length(&s, &ind.values, ell) / 0.02;
        assert!((gamma - 1.0).abs() < 0.1, "{gamma}");
    }

    #[test]
    fn compression_does_not_damage() {
        let (s, p) = setup(0.01, 0.01, 0.001, ElementOrder::Bilinear);
        let z = vec![0.0; s.num_nodes()];
        let input = MechanicsInput { phi: &z, conc: &z, c0: 0.0, kappa: 1e-7 };
        // in-plane hydrostatic compression: only the deviator (nonzero
        // because eps33 = 0) drives damage, the volumetric part does not
        let mut bc = Vec::new();
        for n in 0..s.num_nodes() {
            let [x, y] = s.mesh.coords[n];
            bc.push((2 * n, -1e-3 * x));
            bc.push((2 * n + 1, -1e-3 * y));
        }
        let sol = solve_displacement(&s, &p, &input, &vec![0.0; 2 * s.num_nodes()], &bc, SolverKind::Direct).unwrap();
        let psi = tensile_energy(&s, &p, &input, &sol.u);
        let law = p.laws[0];
        let eps = Sym2::new(-1e-3, -1e-3, 0.0);
        let pure_dev = law.mu * crate::constitutive::deviatoric_square(eps);
        assert!(psi.iter().all(|&v| (v - pure_dev).abs() < 1e-12));
        assert!(law.split_energy(eps).1 > 10.0 * pure_dev);
    }
}
