//! Isoparametric quadrilaterals: 4-node bilinear and 8-node serendipity.
//!
//! Local node order is counter-clockwise corners, then (for Q8) the
//! mid-side nodes of edges 0-1, 1-2, 2-3, 3-0. Both element types are
//! integrated with the 2x2 Gauss rule (reduced for Q8).

use serde::{Deserialize, Serialize};

/// Upper bound on nodes per element, used for fixed-size scratch arrays.
pub const MAX_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementOrder {
    #[default]
    Bilinear,
    Serendipity8,
}

impl ElementOrder {
    pub fn nodes_per_element(self) -> usize {
        match self {
            ElementOrder::Bilinear => 4,
            ElementOrder::Serendipity8 => 8,
        }
    }

    /// Local node lists of the four edges, ordered along the edge.
    pub fn edges(self) -> &'static [&'static [usize]] {
        match self {
            ElementOrder::Bilinear => &[&[0, 1], &[1, 2], &[2, 3], &[3, 0]],
            ElementOrder::Serendipity8 => &[&[0, 4, 1], &[1, 5, 2], &[2, 6, 3], &[3, 7, 0]],
        }
    }

    /// VTK cell type id.
    pub fn vtk_cell_type(self) -> u8 {
        match self {
            ElementOrder::Bilinear => 9,
            ElementOrder::Serendipity8 => 23,
        }
    }
}

const CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

/// Natural coordinates of the local nodes.
pub fn local_node_coords(order: ElementOrder) -> Vec<[f64; 2]> {
    let mut c = CORNERS.to_vec();
    if order == ElementOrder::Serendipity8 {
        c.extend([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]);
    }
    c
}

/// Shape function values and natural derivatives `[dN/dxi, dN/deta]`.
pub fn shape(order: ElementOrder, xi: f64, eta: f64) -> ([f64; MAX_NODES], [[f64; 2]; MAX_NODES]) {
    let mut n = [0.0; MAX_NODES];
    let mut dn = [[0.0; 2]; MAX_NODES];
    match order {
        ElementOrder::Bilinear => {
            for (a, &[xa, ya]) in CORNERS.iter().enumerate() {
                n[a] = 0.25 * (1.0 + xa * xi) * (1.0 + ya * eta);
                dn[a][0] = 0.25 * xa * (1.0 + ya * eta);
                dn[a][1] = 0.25 * ya * (1.0 + xa * xi);
            }
        }
        ElementOrder::Serendipity8 => {
            for (a, &[xa, ya]) in CORNERS.iter().enumerate() {
                let (p, q) = (1.0 + xa * xi, 1.0 + ya * eta);
                n[a] = 0.25 * p * q * (xa * xi + ya * eta - 1.0);
                dn[a][0] = 0.25 * xa * q * (2.0 * xa * xi + ya * eta);
                dn[a][1] = 0.25 * ya * p * (xa * xi + 2.0 * ya * eta);
            }
            // mid-sides on eta = -1, +1 (xi varies)
            for (a, ya) in [(4, -1.0), (6, 1.0)] {
                n[a] = 0.5 * (1.0 - xi * xi) * (1.0 + ya * eta);
                dn[a][0] = -xi * (1.0 + ya * eta);
                dn[a][1] = 0.5 * ya * (1.0 - xi * xi);
            }
            // mid-sides on xi = +1, -1 (eta varies)
            for (a, xa) in [(5, 1.0), (7, -1.0)] {
                n[a] = 0.5 * (1.0 + xa * xi) * (1.0 - eta * eta);
                dn[a][0] = 0.5 * xa * (1.0 - eta * eta);
                dn[a][1] = -eta * (1.0 + xa * xi);
            }
        }
    }
    (n, dn)
}

/// 1D Gauss-Legendre points and weights on [-1, 1].
pub fn gauss_1d(points: usize) -> Vec<(f64, f64)> {
    match points {
        1 => vec![(0.0, 2.0)],
        2 => {
            let g = 1.0 / 3f64.sqrt();
            vec![(-g, 1.0), (g, 1.0)]
        }
        3 => {
            let g = (0.6f64).sqrt();
            vec![(-g, 5.0 / 9.0), (0.0, 8.0 / 9.0), (g, 5.0 / 9.0)]
        }
        4 => {
            let a = (3.0 / 7.0 - 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
            let b = (3.0 / 7.0 + 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
            let wa = (18.0 + 30f64.sqrt()) / 36.0;
            let wb = (18.0 - 30f64.sqrt()) / 36.0;
            vec![(-b, wb), (-a, wa), (a, wa), (b, wb)]
        }
        5 => {
            let a = 1.0 / 3.0 * (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt();
            let b = 1.0 / 3.0 * (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt();
            let w0 = 128.0 / 225.0;
            let wa = (322.0 + 13.0 * 70f64.sqrt()) / 900.0;
            let wb = (322.0 - 13.0 * 70f64.sqrt()) / 900.0;
            vec![(-b, wb), (-a, wa), (0.0, w0), (a, wa), (b, wb)]
        }
        _ => panic!("Gauss rule with {points} points is not tabulated"),
    }
}

/// Tensor-product rule: `(xi, eta, weight)`.
pub fn gauss_2d(points: usize) -> Vec<(f64, f64, f64)> {
    let g = gauss_1d(points);
    let mut out = Vec::with_capacity(points * points);
    for &(eta, we) in &g {
        for &(xi, wx) in &g {
            out.push((xi, eta, wx * we));
        }
    }
    out
}

/// Mapped quadrature data for one integration point.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    /// `det J * w`
    pub weight: f64,
    pub det_j: f64,
    pub n: [f64; MAX_NODES],
    /// Cartesian gradients `[dN/dx, dN/dy]`.
    pub grad: [[f64; 2]; MAX_NODES],
    pub x: [f64; 2],
}

/// Map one point of an element with nodal coordinates `xy`.
pub fn map_point(order: ElementOrder, xy: &[[f64; 2]], xi: f64, eta: f64, w: f64) -> QuadPoint {
    let nn = order.nodes_per_element();
    let (n, dn) = shape(order, xi, eta);
    let mut j = [[0.0; 2]; 2];
    let mut x = [0.0; 2];
    for a in 0..nn {
        for d in 0..2 {
            x[d] += n[a] * xy[a][d];
            j[0][d] += dn[a][0] * xy[a][d];
            j[1][d] += dn[a][1] * xy[a][d];
        }
    }
    // J = [[dx/dxi, dy/dxi], [dx/deta, dy/deta]]
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let inv = [
        [j[1][1] / det, -j[0][1] / det],
        [-j[1][0] / det, j[0][0] / det],
    ];
    let mut grad = [[0.0; 2]; MAX_NODES];
    for a in 0..nn {
        grad[a][0] = inv[0][0] * dn[a][0] + inv[0][1] * dn[a][1];
        grad[a][1] = inv[1][0] * dn[a][0] + inv[1][1] * dn[a][1];
    }
    QuadPoint {
        weight: det * w,
        det_j: det,
        n,
        grad,
        x,
    }
}

/// 1D shape functions along an edge with 2 or 3 nodes, parameter s in [-1, 1].
pub fn edge_shape(nodes: usize, s: f64) -> ([f64; 3], [f64; 3]) {
    match nodes {
        2 => ([0.5 * (1.0 - s), 0.5 * (1.0 + s), 0.0], [-0.5, 0.5, 0.0]),
        3 => (
            [0.5 * s * (s - 1.0), 1.0 - s * s, 0.5 * s * (s + 1.0)],
            [s - 0.5, -2.0 * s, s + 0.5],
        ),
        _ => panic!("edges have 2 or 3 nodes"),
    }
}
