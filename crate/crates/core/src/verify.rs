//! Solver-versus-oracle checks of the individual sub-problems.
//!
//! Each check builds a small problem, solves it with the production code
//! path and compares against a closed form from [`crate::oracles`].

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diffusion::{
    assemble_diffusion, diffusion_residual, total_moisture, ConcentrationField, DiffusionSolver, MoistureBc,
    MoistureDirichlet,
};
use crate::element::ElementOrder;
use crate::error::{Error, Result};
use crate::fe::FeSpace;
use crate::fibres::{FibreLayout, Inclusion};
use crate::indicator::{build_property_fields, solve_indicator, IndicatorField, PropertyFields};
use crate::materials::MaterialCatalog;
use crate::mechanics::{
    assemble_displacement, assemble_phase_field, displacement_residual, phase_field_residual, solve_displacement,
    solve_phase_field, stresses, MechanicsInput,
};
use crate::mesh::{build_rect_mesh, classify_regions, Domain2D, LEFT};
use crate::oracles::{
    at2_homogeneous_oracle, fd_jacobian_check, free_swelling_oracle, screened_poisson_oracle, slab_diffusion_oracle,
};
use crate::sparse::SolverKind;

pub const SATURATION: f64 = 0.0745;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub name: &'static str,
    /// What was measured; smaller is better.
    pub metric: f64,
    pub threshold: f64,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.metric < self.threshold
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{tag} {} {:.3e} {:.1e}", self.name, self.metric, self.threshold)
    }
}

pub const ORACLES: &[&str] = &[
    "slab_diffusion",
    "indicator_strip",
    "at2_homogeneous",
    "jacobian_displacement",
    "jacobian_phase_field",
    "jacobian_diffusion",
    "free_swelling_stress",
    "free_swelling_elongation",
    "moisture_conservation",
];

pub fn run_oracle(name: &str) -> Result<OracleReport> {
    match name {
        "slab_diffusion" => slab_diffusion(),
        "indicator_strip" => indicator_strip(),
        "at2_homogeneous" => at2_homogeneous(),
        "jacobian_displacement" => jacobian_displacement(100, 7),
        "jacobian_phase_field" => jacobian_phase_field(100, 8),
        "jacobian_diffusion" => jacobian_diffusion(100, 9),
        "free_swelling_stress" => free_swelling().map(|r| r.0),
        "free_swelling_elongation" => free_swelling().map(|r| r.1),
        "moisture_conservation" => moisture_conservation(1000),
        _ => Err(Error::Config(format!(
            "unknown oracle `{name}`; expected one of {}",
            ORACLES.join(", ")
        ))),
    }
}

fn strip(len: f64, height: f64, h: f64) -> Result<FeSpace> {
    let d = Domain2D::new(len, height)?;
    FeSpace::new(build_rect_mesh(&d, h, ElementOrder::Bilinear)?)
}

fn bulk_properties(space: &FeSpace, catalog: &MaterialCatalog) -> Result<PropertyFields> {
    let zero = IndicatorField {
        values: vec![0.0; space.num_nodes()],
        length_scale: 1.0,
    };
    build_property_fields(&zero, space, catalog, &FibreLayout::empty(), 2.0)
}

/// Epoxy slab wetted on one face, insulated on the other, at Fourier
/// number 0.2: relative L2 error against the series solution.
pub fn slab_diffusion() -> Result<OracleReport> {
    let (len, d, cs) = (1.0, 1.45e-6, SATURATION);
    let s = strip(len, len / 100.0, len / 100.0)?;
    let t_end = 0.2 * len * len / d;
    let steps = 400;
    let dt = t_end / steps as f64;
    let mut solver = DiffusionSolver::new(&s, &vec![d; s.num_qp()], SolverKind::Direct)?;
    let bc = MoistureBc {
        dirichlet: vec![MoistureDirichlet {
            set: LEFT.into(),
            value: cs,
            start: 0.0,
            end: f64::INFINITY,
        }],
        flux: vec![],
    };
    let mut c = ConcentrationField::uniform(s.num_nodes(), 0.0);
    for _ in 0..steps {
        c = solver.step(&s, &c, &bc, dt)?;
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (p, v) in s.mesh.coords.iter().zip(&c.values) {
        let exact = slab_diffusion_oracle(p[0], t_end, d, cs, len);
        num += (v - exact).powi(2);
        den += exact * exact;
    }
    Ok(OracleReport {
        name: "slab_diffusion",
        metric: (num / den).sqrt(),
        threshold: 0.01,
    })
}

/// Indicator seeded on one end of a long strip at `h = l/10`: largest
/// nodal deviation from `exp(-x/l)`.
pub fn indicator_strip() -> Result<OracleReport> {
    let ell = 0.1;
    let s = strip(1.5, 2.0 * ell / 10.0, ell / 10.0)?;
    let seam = s.mesh.node_set(LEFT)?.to_vec();
    let f = solve_indicator(&s, &seam, ell, SolverKind::Direct)?;
    let worst = s
        .mesh
        .coords
        .iter()
        .zip(&f.values)
        .map(|(p, v)| (v - screened_poisson_oracle(p[0], ell)).abs())
        .fold(0.0, f64::max);
    Ok(OracleReport {
        name: "indicator_strip",
        metric: worst,
        threshold: 0.02,
    })
}

/// Uniform history on a patch: largest deviation from `2lH/(Gc + 2lH)`
/// over four history levels.
pub fn at2_homogeneous() -> Result<OracleReport> {
    let (gc, ell) = (1.2, 0.001);
    let s = strip(0.02, 0.02, 0.001)?;
    let mut worst = 0.0f64;
    for h in [0.0, gc / (4.0 * ell), gc / (2.0 * ell), 2.0 * gc / ell] {
        let phi = solve_phase_field(&s, &vec![h; s.num_qp()], &vec![gc; s.num_qp()], ell, SolverKind::Direct)?;
        let exact = at2_homogeneous_oracle(h, gc, ell);
        worst = phi.iter().map(|v| (v - exact).abs()).fold(worst, f64::max);
    }
    Ok(OracleReport {
        name: "at2_homogeneous",
        metric: worst,
        threshold: 1e-6,
    })
}

/// Single undistorted element with random damage, concentration,
/// displacement and (half the draws) a rotated fibre law.
pub fn jacobian_displacement(draws: usize, seed: u64) -> Result<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cat = MaterialCatalog::flax_epoxy();
    let mut worst = 0.0f64;
    for k in 0..draws {
        let s = strip(0.01, 0.01, 0.01)?;
        let props = if k % 2 == 0 {
            bulk_properties(&s, &cat)?
        } else {
            // whole element inside a rotated fibre strip
            let theta = rng.gen_range(0.0..180.0);
            let layout = FibreLayout::explicit(vec![Inclusion::strip(-1.0, 1.0, theta)]);
            let s2 = FeSpace::new(classify_regions(&s.mesh, &layout))?;
            let zero = IndicatorField {
                values: vec![0.0; s2.num_nodes()],
                length_scale: 1.0,
            };
            build_property_fields(&zero, &s2, &cat, &layout, 2.0)?
        };
        let phi: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
        let conc: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..0.1)).collect();
        let u: Vec<f64> = (0..8).map(|_| rng.gen_range(-1e-3..1e-3)).collect();
        let input = MechanicsInput {
            phi: &phi,
            conc: &conc,
            c0: 0.0,
            kappa: 1e-7,
        };
        let sys = assemble_displacement(&s, &props, &input, &u);
        let err = fd_jacobian_check(
            |x| displacement_residual(&s, &props, &input, x),
            &sys.matrix.to_dense(),
            &u,
            1e-6,
        );
        worst = worst.max(err);
    }
    Ok(OracleReport {
        name: "jacobian_displacement",
        metric: worst,
        threshold: 1e-6,
    })
}

pub fn jacobian_phase_field(draws: usize, seed: u64) -> Result<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = strip(0.001, 0.001, 0.001)?;
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let hist: Vec<f64> = (0..s.num_qp()).map(|_| rng.gen_range(0.0..5000.0)).collect();
        let gc: Vec<f64> = (0..s.num_qp()).map(|_| rng.gen_range(0.2..2.1)).collect();
        let phi: Vec<f64> = (0..s.num_nodes()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let sys = assemble_phase_field(&s, &hist, &gc, 0.001);
        let err = fd_jacobian_check(|x| phase_field_residual(&sys, x), &sys.matrix.to_dense(), &phi, 1e-6);
        worst = worst.max(err);
    }
    Ok(OracleReport {
        name: "jacobian_phase_field",
        metric: worst,
        threshold: 1e-6,
    })
}

pub fn jacobian_diffusion(draws: usize, seed: u64) -> Result<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = strip(0.01, 0.01, 0.01)?;
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let d: Vec<f64> = (0..s.num_qp()).map(|_| rng.gen_range(0.8e-6..1.45e-6)).collect();
        let c: Vec<f64> = (0..s.num_nodes()).map(|_| rng.gen_range(0.0..0.0745)).collect();
        let old: Vec<f64> = (0..s.num_nodes()).map(|_| rng.gen_range(0.0..0.0745)).collect();
        let dt = rng.gen_range(1.0..100.0);
        let prev = ConcentrationField {
            values: old.clone(),
            time: 0.0,
        };
        let sys = assemble_diffusion(&s, &d, &prev, dt)?;
        let err = fd_jacobian_check(|x| diffusion_residual(&s, &d, x, &old, dt), &sys.matrix.to_dense(), &c, 1e-6);
        worst = worst.max(err);
    }
    Ok(OracleReport {
        name: "jacobian_diffusion",
        metric: worst,
        threshold: 1e-6,
    })
}

/// Unit epoxy square, uniformly wet, held against rigid motion only:
/// `(max |sigma| / E, |dL/L - alpha dC|)`.
pub fn free_swelling() -> Result<(OracleReport, OracleReport)> {
    let cat = MaterialCatalog::flax_epoxy();
    let s = strip(1.0, 1.0, 0.1)?;
    let props = bulk_properties(&s, &cat)?;
    let zero = vec![0.0; s.num_nodes()];
    let wet = vec![SATURATION; s.num_nodes()];
    let input = MechanicsInput {
        phi: &zero,
        conc: &wet,
        c0: 0.0,
        kappa: 1e-7,
    };
    let a = s.mesh.nearest_node([0.0, 0.0]);
    let b = s.mesh.nearest_node([1.0, 0.0]);
    let bc = [(2 * a, 0.0), (2 * a + 1, 0.0), (2 * b + 1, 0.0)];
    let sol = solve_displacement(&s, &props, &input, &vec![0.0; 2 * s.num_nodes()], &bc, SolverKind::Direct)?;
    let e = cat.matrix.elastic.e11;
    let sigma = stresses(&s, &props, &input, &sol.u)
        .iter()
        .map(|t| t.max_abs())
        .fold(0.0, f64::max);
    let expected = free_swelling_oracle(cat.matrix.hygro.alpha11, SATURATION, 1.0);
    let stretch = sol.u[2 * b] - sol.u[2 * a];
    Ok((
        OracleReport {
            name: "free_swelling_stress",
            metric: sigma / e,
            threshold: 1e-6,
        },
        OracleReport {
            name: "free_swelling_elongation",
            metric: (stretch - expected).abs(),
            threshold: 1e-6,
        },
    ))
}

/// Largest relative change in total moisture per step of a sealed body
/// with a nonuniform initial field and varying diffusivity.
pub fn moisture_conservation(steps: usize) -> Result<OracleReport> {
    let s = strip(0.02, 0.01, 0.001)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let d: Vec<f64> = (0..s.num_qp()).map(|_| rng.gen_range(0.8e-6..1.45e-6)).collect();
    let mut solver = DiffusionSolver::new(&s, &d, SolverKind::Direct)?;
    let mut c = ConcentrationField {
        values: (0..s.num_nodes()).map(|_| rng.gen_range(0.0..SATURATION)).collect(),
        time: 0.0,
    };
    let sealed = MoistureBc::default();
    let mut worst = 0.0f64;
    let mut before = total_moisture(&c, &s);
    for _ in 0..steps {
        c = solver.step(&s, &c, &sealed, 5.0)?;
        let after = total_moisture(&c, &s);
        worst = worst.max(((after - before) / before).abs());
        before = after;
    }
    Ok(OracleReport {
        name: "moisture_conservation",
        metric: worst,
        threshold: 1e-10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_oracle_passes() {
        for name in ORACLES {
            let r = run_oracle(name).unwrap();
            assert!(r.passed(), "{r}");
            assert!(r.to_string().starts_with("PASS "));
        }
        assert!(run_oracle("bogus").is_err());
    }
}
