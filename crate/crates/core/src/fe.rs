//! Mesh plus cached quadrature data: the common discretisation used by every
//! sub-problem.

use crate::element::{gauss_2d, map_point, QuadPoint};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sparse::CsrMatrix;

/// Gauss points per direction for both element types.
const GAUSS: usize = 2;

#[derive(Debug, Clone)]
pub struct FeSpace {
    pub mesh: Mesh,
    qps: Vec<QuadPoint>,
    nqp: usize,
    /// HRZ-lumped mass per element node (element-major).
    lumped: Vec<f64>,
    adjacency: Vec<Vec<usize>>,
}

impl FeSpace {
    pub fn new(mesh: Mesh) -> Result<Self> {
        let rule = gauss_2d(GAUSS);
        let nqp = rule.len();
        let k = mesh.nodes_per_element();
        let mut qps = Vec::with_capacity(mesh.num_elements() * nqp);
        let mut lumped = Vec::with_capacity(mesh.num_elements() * k);
        let mut adjacency = vec![Vec::new(); mesh.num_nodes()];
        // HRZ needs the consistent mass diagonal, integrated exactly
        let mass_rule = gauss_2d(3);
        for e in 0..mesh.num_elements() {
            let xy = mesh.element_coords(e);
            for &(xi, eta, w) in &rule {
                let qp = map_point(mesh.order, &xy, xi, eta, w);
                if !(qp.det_j > 0.0) {
                    return Err(Error::DegenerateMesh(format!(
                        "element {e} has Jacobian {} at ({xi:.3}, {eta:.3})",
                        qp.det_j
                    )));
                }
                qps.push(qp);
            }
            let mut diag = [0.0; 8];
            let mut area = 0.0;
            for &(xi, eta, w) in &mass_rule {
                let qp = map_point(mesh.order, &xy, xi, eta, w);
                area += qp.weight;
                for a in 0..k {
                    diag[a] += qp.weight * qp.n[a] * qp.n[a];
                }
            }
            let total: f64 = diag[..k].iter().sum();
            lumped.extend(diag[..k].iter().map(|d| d * area / total));
            let conn = mesh.element(e);
            for &a in conn {
                adjacency[a].extend_from_slice(conn);
            }
        }
        for row in adjacency.iter_mut() {
            row.sort_unstable();
            row.dedup();
        }
        Ok(Self {
            mesh,
            qps,
            nqp,
            lumped,
            adjacency,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.num_nodes()
    }

    pub fn num_elements(&self) -> usize {
        self.mesh.num_elements()
    }

    pub fn nqp(&self) -> usize {
        self.nqp
    }

    pub fn num_qp(&self) -> usize {
        self.qps.len()
    }

    pub fn qps(&self, e: usize) -> &[QuadPoint] {
        &self.qps[e * self.nqp..(e + 1) * self.nqp]
    }

    pub fn lumped(&self, e: usize) -> &[f64] {
        let k = self.mesh.nodes_per_element();
        &self.lumped[e * k..(e + 1) * k]
    }

    /// Zero matrix with one unknown per node.
    pub fn scalar_matrix(&self) -> CsrMatrix {
        CsrMatrix::from_pattern(self.num_nodes(), self.adjacency.clone())
    }

    /// Zero matrix with two unknowns per node, interleaved `(ux, uy)`.
    pub fn vector_matrix(&self) -> CsrMatrix {
        let mut rows = Vec::with_capacity(2 * self.num_nodes());
        for adj in &self.adjacency {
            let cols: Vec<usize> = adj.iter().flat_map(|&b| [2 * b, 2 * b + 1]).collect();
            rows.push(cols.clone());
            rows.push(cols);
        }
        CsrMatrix::from_pattern(2 * self.num_nodes(), rows)
    }

    /// Nodal field interpolated at quadrature point `q` of element `e`.
    pub fn at_qp(&self, e: usize, q: usize, nodal: &[f64]) -> f64 {
        let qp = &self.qps(e)[q];
        self.mesh
            .element(e)
            .iter()
            .enumerate()
            .map(|(a, &n)| qp.n[a] * nodal[n])
            .sum()
    }

    /// Nodal field at every quadrature point (element-major).
    pub fn to_qp(&self, nodal: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_qp());
        for e in 0..self.num_elements() {
            for q in 0..self.nqp {
                out.push(self.at_qp(e, q, nodal));
            }
        }
        out
    }

    /// `int f dV` of a nodal field.
    pub fn integrate(&self, nodal: &[f64]) -> f64 {
        (0..self.num_elements())
            .map(|e| {
                (0..self.nqp)
                    .map(|q| self.qps(e)[q].weight * self.at_qp(e, q, nodal))
                    .sum::<f64>()
            })
            .sum()
    }

    /// Area-weighted mean of a quadrature-point field over element `e`.
    pub fn element_mean(&self, e: usize, qp_values: &[f64]) -> f64 {
        let qps = self.qps(e);
        let mut num = 0.0;
        let mut den = 0.0;
        for (q, qp) in qps.iter().enumerate() {
            num += qp.weight * qp_values[e * self.nqp + q];
            den += qp.weight;
        }
        num / den
    }

    pub fn element_area(&self, e: usize) -> f64 {
        self.qps(e).iter().map(|q| q.weight).sum()
    }

    /// Average of element-wise quadrature values onto nodes (area weighted).
    pub fn qp_to_nodes(&self, qp_values: &[f64]) -> Vec<f64> {
        let n = self.num_nodes();
        let mut num = vec![0.0; n];
        let mut den = vec![0.0; n];
        for e in 0..self.num_elements() {
            let m = self.element_mean(e, qp_values);
            let area = self.element_area(e);
            for &a in self.mesh.element(e) {
                num[a] += area * m;
                den[a] += area;
            }
        }
        num.iter().zip(&den).map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 }).collect()
    }
}
