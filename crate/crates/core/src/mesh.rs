//! Structured quadrilateral meshes of rectangular composite cells, region
//! tagging against a fibre layout, and geometric edge cracks.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::element::{gauss_2d, map_point, ElementOrder};
use crate::error::{Error, Result};
use crate::fibres::FibreLayout;

pub const LEFT: &str = "left";
pub const RIGHT: &str = "right";
pub const BOTTOM: &str = "bottom";
pub const TOP: &str = "top";
pub const INTERFACE: &str = "interface";
pub const CRACK_LOWER: &str = "crack_lower";
pub const CRACK_UPPER: &str = "crack_upper";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain2D {
    pub width: f64,
    pub height: f64,
    #[serde(default)]
    pub origin: [f64; 2],
}

impl Domain2D {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        Self::with_origin(width, height, [0.0, 0.0])
    }

    pub fn with_origin(width: f64, height: f64, origin: [f64; 2]) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) || !width.is_finite() || !height.is_finite() {
            return Err(Error::DegenerateMesh(format!(
                "domain must have positive size, got {width} x {height}"
            )));
        }
        Ok(Self {
            width,
            height,
            origin,
        })
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn center(&self) -> [f64; 2] {
        [
            self.origin[0] + 0.5 * self.width,
            self.origin[1] + 0.5 * self.height,
        ]
    }
}

/// Material region of an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Matrix,
    /// Index into the fibre layout's inclusions.
    Fibre(usize),
}

impl Region {
    /// Integer tag for output: -1 for matrix, fibre index otherwise.
    pub fn tag(self) -> i64 {
        match self {
            Region::Matrix => -1,
            Region::Fibre(i) => i as i64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrackSeam {
    pub polyline: Vec<[f64; 2]>,
    /// (lower face node, upper face copy)
    pub pairs: Vec<(usize, usize)>,
}

impl CrackSeam {
    pub fn length(&self) -> f64 {
        self.polyline
            .windows(2)
            .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
            .sum()
    }

    pub fn tip(&self) -> [f64; 2] {
        *self.polyline.last().expect("seam has a tip")
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub domain: Domain2D,
    pub order: ElementOrder,
    pub coords: Vec<[f64; 2]>,
    connectivity: Vec<usize>,
    pub regions: Vec<Region>,
    pub node_sets: BTreeMap<String, Vec<usize>>,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
}

/// Structured grid over the domain with `ceil(W/h) x ceil(H/h)` elements.
pub fn build_rect_mesh(domain: &Domain2D, h_target: f64, order: ElementOrder) -> Result<Mesh> {
    if !(h_target > 0.0) || !h_target.is_finite() {
        return Err(Error::DegenerateMesh(format!(
            "target element size must be positive, got {h_target}"
        )));
    }
    let limit = domain.width.min(domain.height);
    if h_target > limit * (1.0 + 1e-12) {
        return Err(Error::DegenerateMesh(format!(
            "target element size {h_target} exceeds the smallest domain side {limit}"
        )));
    }
    let count = |len: f64| ((len / h_target) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let nx = count(domain.width);
    let ny = count(domain.height);
    let hx = domain.width / nx as f64;
    let hy = domain.height / ny as f64;
    let [x0, y0] = domain.origin;

    let mut coords = Vec::new();
    let mut connectivity = Vec::new();
    let mut sets: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for name in [LEFT, RIGHT, BOTTOM, TOP] {
        sets.insert(name.to_string(), Vec::new());
    }

    // Sub-grid of half-steps for Q8; the full grid for Q4.
    let (sub, gx, gy) = match order {
        ElementOrder::Bilinear => (1, nx, ny),
        ElementOrder::Serendipity8 => (2, 2 * nx, 2 * ny),
    };
    let mut index = vec![usize::MAX; (gx + 1) * (gy + 1)];
    for jj in 0..=gy {
        for ii in 0..=gx {
            if sub == 2 && ii % 2 == 1 && jj % 2 == 1 {
                continue;
            }
            let id = coords.len();
            index[jj * (gx + 1) + ii] = id;
            let x = if ii == gx { x0 + domain.width } else { x0 + ii as f64 * hx / sub as f64 };
            let y = if jj == gy { y0 + domain.height } else { y0 + jj as f64 * hy / sub as f64 };
            coords.push([x, y]);
            if ii == 0 {
                sets.get_mut(LEFT).unwrap().push(id);
            }
            if ii == gx {
                sets.get_mut(RIGHT).unwrap().push(id);
            }
            if jj == 0 {
                sets.get_mut(BOTTOM).unwrap().push(id);
            }
            if jj == gy {
                sets.get_mut(TOP).unwrap().push(id);
            }
        }
    }
    let at = |ii: usize, jj: usize| index[jj * (gx + 1) + ii];
    for j in 0..ny {
        for i in 0..nx {
            let (ii, jj) = (sub * i, sub * j);
            connectivity.extend([
                at(ii, jj),
                at(ii + sub, jj),
                at(ii + sub, jj + sub),
                at(ii, jj + sub),
            ]);
            if sub == 2 {
                connectivity.extend([
                    at(ii + 1, jj),
                    at(ii + 2, jj + 1),
                    at(ii + 1, jj + 2),
                    at(ii, jj + 1),
                ]);
            }
        }
    }
    for set in sets.values_mut() {
        set.sort_unstable();
    }
    Ok(Mesh {
        domain: *domain,
        order,
        coords,
        connectivity,
        regions: vec![Region::Matrix; nx * ny],
        node_sets: sets,
        nx,
        ny,
        hx,
        hy,
    })
}

impl Mesh {
    pub fn num_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn num_elements(&self) -> usize {
        self.regions.len()
    }

    pub fn nodes_per_element(&self) -> usize {
        self.order.nodes_per_element()
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.nodes_per_element();
        &self.connectivity[e * k..(e + 1) * k]
    }

    pub fn element_coords(&self, e: usize) -> Vec<[f64; 2]> {
        self.element(e).iter().map(|&n| self.coords[n]).collect()
    }

    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let c = &self.element(e)[..4];
        let mut p = [0.0; 2];
        for &n in c {
            p[0] += 0.25 * self.coords[n][0];
            p[1] += 0.25 * self.coords[n][1];
        }
        p
    }

    /// Characteristic element size.
    pub fn h(&self) -> f64 {
        self.hx.max(self.hy)
    }

    pub fn node_set(&self, name: &str) -> Result<&[usize]> {
        self.node_sets
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Config(format!("unknown node set `{name}`")))
    }

    pub fn nearest_node(&self, p: [f64; 2]) -> usize {
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for (i, c) in self.coords.iter().enumerate() {
            let d = (c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2);
            if d < bd {
                bd = d;
                best = i;
            }
        }
        best
    }

    /// Smallest Jacobian determinant over all elements and 2x2 Gauss points.
    pub fn min_jacobian(&self) -> f64 {
        let rule = gauss_2d(2);
        (0..self.num_elements())
            .flat_map(|e| {
                let xy = self.element_coords(e);
                rule.iter()
                    .map(move |&(xi, eta, w)| map_point(self.order, &xy, xi, eta, w).det_j)
                    .collect::<Vec<_>>()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Errors unless `h <= length_scale / 2`.
    pub fn check_length_scale(&self, length_scale: f64) -> Result<()> {
        if self.h() > 0.5 * length_scale * (1.0 + 1e-9) {
            return Err(Error::DegenerateMesh(format!(
                "element size {} exceeds half the length scale {}",
                self.h(),
                length_scale
            )));
        }
        Ok(())
    }

    /// Element edges whose nodes all belong to the named set, as global node
    /// lists ordered along the edge.
    pub fn boundary_edges(&self, set: &str) -> Result<Vec<Vec<usize>>> {
        let nodes = self.node_set(set)?;
        let mut member = vec![false; self.num_nodes()];
        for &n in nodes {
            member[n] = true;
        }
        let counts = self.edge_use_counts();
        let mut out = Vec::new();
        for e in 0..self.num_elements() {
            let conn = self.element(e);
            for edge in self.order.edges() {
                let g: Vec<usize> = edge.iter().map(|&a| conn[a]).collect();
                if g.iter().all(|&n| member[n]) && counts[&edge_key(&g)] == 1 {
                    out.push(g);
                }
            }
        }
        Ok(out)
    }

    fn edge_use_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut counts = HashMap::new();
        for e in 0..self.num_elements() {
            let conn = self.element(e);
            for edge in self.order.edges() {
                let g: Vec<usize> = edge.iter().map(|&a| conn[a]).collect();
                *counts.entry(edge_key(&g)).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Plain-text node and element tables.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# nodes {}", self.num_nodes())?;
        for (i, c) in self.coords.iter().enumerate() {
            writeln!(w, "{i} {} {}", c[0], c[1])?;
        }
        writeln!(w, "# elements {} {:?}", self.num_elements(), self.order)?;
        for e in 0..self.num_elements() {
            let nodes: Vec<String> = self.element(e).iter().map(usize::to_string).collect();
            writeln!(w, "{e} {} {}", self.regions[e].tag(), nodes.join(" "))?;
        }
        for (name, nodes) in &self.node_sets {
            writeln!(w, "# set {name} {}", nodes.len())?;
        }
        Ok(())
    }
}

fn edge_key(nodes: &[usize]) -> (usize, usize) {
    let (a, b) = (nodes[0], *nodes.last().unwrap());
    (a.min(b), a.max(b))
}

/// Tag each element by whether its centroid lies in a fibre, and collect
/// the nodes of every edge shared by elements of different regions into
/// the `interface` node set.
pub fn classify_regions(mesh: &Mesh, layout: &FibreLayout) -> Mesh {
    let mut out = mesh.clone();
    for e in 0..out.num_elements() {
        out.regions[e] = match layout.locate(out.centroid(e)) {
            Some(i) => Region::Fibre(i),
            None => Region::Matrix,
        };
    }
    let mut owners: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    for e in 0..out.num_elements() {
        let conn = out.element(e);
        for (k, edge) in out.order.edges().iter().enumerate() {
            let g: Vec<usize> = edge.iter().map(|&a| conn[a]).collect();
            owners.entry(edge_key(&g)).or_default().push((e, k));
        }
    }
    let mut interface = Vec::new();
    for list in owners.values() {
        if let [(e1, k1), (e2, _)] = list.as_slice() {
            if out.regions[*e1] != out.regions[*e2] {
                let conn = out.element(*e1);
                interface.extend(out.order.edges()[*k1].iter().map(|&a| conn[a]));
            }
        }
    }
    interface.sort_unstable();
    interface.dedup();
    out.node_sets.insert(INTERFACE.to_string(), interface);
    out
}

/// Open a straight crack of length `a0` from the left edge along the mesh
/// line `y = y_pos`. Seam nodes from the mouth up to (not including) the tip
/// are duplicated and elements above the seam are re-pointed to the copies.
pub fn insert_edge_crack(mesh: &Mesh, a0: f64, y_pos: f64) -> Result<(Mesh, Option<CrackSeam>)> {
    if a0 == 0.0 {
        return Ok((mesh.clone(), None));
    }
    let d = &mesh.domain;
    let [x0, y0] = d.origin;
    if !(a0 > 0.0 && a0 < d.width) {
        return Err(Error::SeamAlignment(format!(
            "crack length {a0} must lie in (0, {})",
            d.width
        )));
    }
    let rows = (y_pos - y0) / mesh.hy;
    let cols = a0 / mesh.hx;
    if (rows - rows.round()).abs() > 1e-6
        || (cols - cols.round()).abs() > 1e-6
        || rows.round() < 1.0
        || rows.round() >= mesh.ny as f64
    {
        return Err(Error::SeamAlignment(format!(
            "crack at y = {y_pos} with length {a0} does not follow element edges \
             (hx = {}, hy = {})",
            mesh.hx, mesh.hy
        )));
    }
    let tol = 1e-6 * mesh.hx.min(mesh.hy);
    let tip = x0 + a0;
    let mut seam: Vec<usize> = (0..mesh.num_nodes())
        .filter(|&n| {
            let c = mesh.coords[n];
            (c[1] - y_pos).abs() < tol && c[0] < tip - tol
        })
        .collect();
    seam.sort_by(|&a, &b| mesh.coords[a][0].total_cmp(&mesh.coords[b][0]));

    let mut out = mesh.clone();
    let mut copy_of = HashMap::new();
    let mut pairs = Vec::with_capacity(seam.len());
    for &n in &seam {
        let id = out.coords.len();
        out.coords.push(mesh.coords[n]);
        copy_of.insert(n, id);
        pairs.push((n, id));
    }
    let k = out.nodes_per_element();
    for e in 0..out.num_elements() {
        if out.centroid(e)[1] > y_pos {
            for slot in &mut out.connectivity[e * k..(e + 1) * k] {
                if let Some(&c) = copy_of.get(slot) {
                    *slot = c;
                }
            }
        }
    }
    for set in out.node_sets.values_mut() {
        let extra: Vec<usize> = set.iter().filter_map(|n| copy_of.get(n).copied()).collect();
        set.extend(extra);
        set.sort_unstable();
    }
    out.node_sets.insert(CRACK_LOWER.to_string(), seam);
    let mut upper: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    upper.sort_unstable();
    out.node_sets.insert(CRACK_UPPER.to_string(), upper);
    Ok((
        out,
        Some(CrackSeam {
            polyline: vec![[x0, y_pos], [tip, y_pos]],
            pairs,
        }),
    ))
}
