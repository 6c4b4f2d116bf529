//! Diffuse interface indicator and property interpolation across it.

use crate::constitutive::ElasticLaw;
use crate::error::Result;
use crate::fe::FeSpace;
use crate::fibres::FibreLayout;
use crate::materials::{HygroParams, Material, MaterialCatalog};
use crate::mesh::Region;
use crate::sparse::{ConstrainedSolver, SolverKind};

/// Nodal indicator values, 1 on the interface seam and decaying into the bulk.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorField {
    pub values: Vec<f64>,
    pub length_scale: f64,
}

/// Weak solution of `d - l^2 lap d = 0` with `d = 1` on `interface_nodes` and
/// zero flux on the boundary. The reaction term uses the lumped mass.
pub fn solve_indicator(
    space: &FeSpace,
    interface_nodes: &[usize],
    length_scale: f64,
    solver: SolverKind,
) -> Result<IndicatorField> {
    let n = space.num_nodes();
    if interface_nodes.is_empty() {
        return Ok(IndicatorField {
            values: vec![0.0; n],
            length_scale,
        });
    }
    let l2 = length_scale * length_scale;
    let mut k = space.scalar_matrix();
    for e in 0..space.num_elements() {
        let conn = space.mesh.element(e);
        for (a, &w) in space.lumped(e).iter().enumerate() {
            k.add(conn[a], conn[a], w);
        }
        for qp in space.qps(e) {
            for (a, &na) in conn.iter().enumerate() {
                for (b, &nb) in conn.iter().enumerate() {
                    let g = qp.grad[a][0] * qp.grad[b][0] + qp.grad[a][1] * qp.grad[b][1];
                    k.add(na, nb, l2 * g * qp.weight);
                }
            }
        }
    }
    let solver = ConstrainedSolver::new(k, interface_nodes, solver)?;
    let rhs = vec![0.0; n];
    let mut values = vec![0.0; n];
    for &i in interface_nodes {
        values[i] = 1.0;
    }
    let values = solver.solve_checked(&rhs, &values)?;
    Ok(IndicatorField {
        values,
        length_scale,
    })
}

/// `(1 - d)^n (bulk - interface) + interface`, with `d` clamped to [0, 1].
pub fn interpolate_property(d: f64, bulk: f64, interface: f64, n: f64) -> f64 {
    let d = d.clamp(0.0, 1.0);
    (1.0 - d).powf(n) * (bulk - interface) + interface
}

/// Material data at every quadrature point (element-major) plus the
/// per-element stiffness, which follows the region tag only.
#[derive(Debug, Clone)]
pub struct PropertyFields {
    pub gc: Vec<f64>,
    pub diffusivity: Vec<f64>,
    pub hygro: Vec<HygroParams>,
    /// Material 1-axis angle per element (degrees).
    pub orientation: Vec<f64>,
    pub laws: Vec<ElasticLaw>,
}

pub fn build_property_fields(
    indicator: &IndicatorField,
    space: &FeSpace,
    catalog: &MaterialCatalog,
    layout: &FibreLayout,
    exponent: f64,
) -> Result<PropertyFields> {
    let ne = space.num_elements();
    let nq = space.num_qp();
    let mut out = PropertyFields {
        gc: Vec::with_capacity(nq),
        diffusivity: Vec::with_capacity(nq),
        hygro: Vec::with_capacity(nq),
        orientation: Vec::with_capacity(ne),
        laws: Vec::with_capacity(ne),
    };
    let matrix_law = ElasticLaw::new(&catalog.matrix.elastic, 0.0)?;
    let iface = &catalog.interface;
    for e in 0..ne {
        let (bulk, theta): (&Material, f64) = match space.mesh.regions[e] {
            Region::Matrix => (&catalog.matrix, 0.0),
            Region::Fibre(i) => (&catalog.fibre, layout.inclusions.get(i).map_or(0.0, |f| f.orientation_deg)),
        };
        out.orientation.push(theta);
        out.laws.push(match space.mesh.regions[e] {
            Region::Matrix => matrix_law,
            Region::Fibre(_) => ElasticLaw::new(&bulk.elastic, theta)?,
        });
        for q in 0..space.nqp() {
            let d = space.at_qp(e, q, &indicator.values);
            out.gc.push(interpolate_property(d, bulk.gc, iface.gc, exponent));
            out.diffusivity
                .push(interpolate_property(d, bulk.diffusivity, iface.diffusivity, exponent));
            out.hygro.push(HygroParams {
                alpha11: interpolate_property(d, bulk.hygro.alpha11, iface.alpha, exponent),
                alpha22: interpolate_property(d, bulk.hygro.alpha22, iface.alpha, exponent),
            });
        }
    }
    Ok(out)
}
